import asyncio
import json

from services.cache import GroupTableCache, ReportFileService


def test_tables_are_built_once():
    cache = GroupTableCache(maxsize=4)
    calls = []

    def build():
        calls.append(1)
        return {"rows": 3}

    assert cache.get_or_build("dynkin", ("heisenberg1", 2), build) == {"rows": 3}
    assert cache.get_or_build("dynkin", ("heisenberg1", 2), build) == {"rows": 3}
    assert len(calls) == 1
    assert len(cache) == 1
    cache.get_or_build("basis", ("heisenberg1", 2), build)
    assert len(calls) == 2
    cache.clear()
    assert len(cache) == 0


def test_cache_evicts_least_recently_used():
    cache = GroupTableCache(maxsize=2)
    for n in range(3):
        cache.get_or_build("t", n, lambda n=n: n + 1)
    assert len(cache) == 2
    assert cache.get_or_build("t", 0, lambda: "rebuilt") == "rebuilt"


def test_report_files(tmp_path):
    service = ReportFileService(tmp_path)
    report = {"b": 1, "a": [1, 2]}
    assert asyncio.run(service.write("nested/report.json", report))
    text = asyncio.run(service.read(tmp_path / "nested" / "report.json"))
    assert json.loads(text) == report
    assert text.index('"a"') < text.index('"b"')
    assert asyncio.run(service.read(tmp_path / "missing.json")) is None
