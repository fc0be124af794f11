"""
Cache management service
Write-once in-memory tables per group, and report files on disk
"""
import asyncio
import threading
from pathlib import Path
from typing import Any, Callable, Dict, Hashable, Optional

from cachetools import LRUCache

import runtime
from constants import LIMITS
from models.serialization import dumps_report


class GroupTableCache:
    """Write-once tables keyed by (kind, group, extra); builds run under the lock"""

    def __init__(self, maxsize: int = LIMITS["MAX_CACHE_GROUPS"] * 16):
        self._tables = LRUCache(maxsize=maxsize)
        self._lock = threading.RLock()

    def get_or_build(self, kind: str, key: Hashable, builder: Callable[[], Any]) -> Any:
        cache_key = (kind, key)
        with self._lock:
            cached = self._tables.get(cache_key)
            if cached is not None:
                return cached
            runtime.logger.debug(f"Building {kind} table")
            value = builder()
            self._tables[cache_key] = value
            return value

    def clear(self):
        with self._lock:
            self._tables.clear()
            runtime.logger.info("Cleared all group tables")

    def __len__(self) -> int:
        return len(self._tables)


group_tables = GroupTableCache()


class ReportFileService:
    """Writes reports to disk without blocking the event loop"""

    def __init__(self, out_dir: Optional[Path] = None):
        self.out_dir = out_dir

    async def write(self, path: Path, report: Dict) -> bool:
        try:
            path = Path(path)
            if not path.is_absolute() and self.out_dir:
                path = self.out_dir / path
            path.parent.mkdir(parents=True, exist_ok=True)
            content = dumps_report(report) + "\n"

            loop = asyncio.get_event_loop()

            def write_file():
                with open(path, "w") as f:
                    f.write(content)

            await loop.run_in_executor(None, write_file)
            runtime.logger.info(f"Report written to {path}")
            return True
        except OSError as e:
            runtime.logger.error(f"Failed to write report {path}: {e}")
            return False

    async def read(self, path: Path) -> Optional[str]:
        try:
            loop = asyncio.get_event_loop()

            def read_file():
                with open(path, "r") as f:
                    return f.read()

            return await loop.run_in_executor(None, read_file)
        except OSError as e:
            runtime.logger.warning(f"Failed to read report {path}: {e}")
            return None
