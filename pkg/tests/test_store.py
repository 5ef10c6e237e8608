import json

import pytest

from moment_forge.store import INDEX_COLUMNS, ReportStore, StoreError


@pytest.fixture
def store(tmp_path):
    return ReportStore(tmp_path / "reports")


class TestSave:
    def test_json_and_index_row(self, store):
        path = store.save("moment", {"q": 11, "lhs": [1.0, 0.0]},
                          {"q": 11, "sigma0": 0.5, "identity_gap": 1e-12})
        doc = json.loads(path.read_text())
        assert doc["schema"] == 1
        assert doc["kind"] == "moment"
        assert doc["q"] == 11
        rows = store.index_rows()
        assert len(rows) == 1
        assert rows[0]["file"] == path.name
        assert rows[0]["q"] == "11"
        assert rows[0]["slope"] == ""

    def test_append_only(self, store):
        names = [store.save("moment", {"q": q}, {"q": q}).name for q in (5, 7, 11)]
        assert len(set(names)) == 3
        assert [r["file"] for r in store.index_rows()] == names

    def test_unknown_column_rejected(self, store):
        with pytest.raises(ValueError):
            store.save("moment", {}, {"nonsense": 1})

    def test_index_columns_fixed(self):
        assert INDEX_COLUMNS[:3] == ("timestamp", "kind", "file")
        assert "identity_gap" in INDEX_COLUMNS and "slope" in INDEX_COLUMNS

    def test_float_fields_full_precision(self, store):
        value = 0.1234567890123456789
        store.save("moment", {}, {"identity_gap": value})
        row = store.index_rows()[0]
        assert float(row["identity_gap"]) == value


class TestIntegrity:
    def test_clean_store_passes(self, store):
        store.save("fit", {"slope": 0.4}, {"slope": 0.4})
        store.verify_integrity()

    def test_orphan_file_detected(self, store):
        store.save("fit", {}, {})
        (store.root / "stray-x-000.json").write_text("{}")
        with pytest.raises(StoreError):
            store.verify_integrity()

    def test_missing_file_detected(self, store):
        path = store.save("fit", {}, {})
        path.unlink()
        with pytest.raises(StoreError):
            store.verify_integrity()

    def test_load_round_trip(self, store):
        path = store.save("nonvanish", {"q": 13, "minimizer": 6}, {"q": 13})
        doc = store.load(path.name)
        assert doc["minimizer"] == 6

    def test_empty_store(self, store):
        assert store.index_rows() == []
        store.verify_integrity()
