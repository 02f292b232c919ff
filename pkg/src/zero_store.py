"""
Zero Store Module
Process-wide cache of Bessel zero tables with optional text persistence on disk
"""

import sys
import threading
from pathlib import Path
from typing import Dict, Optional

sys.path.append(str(Path(__file__).parent.parent))

import config
from src.special import ZeroTable, bessel_zeros


def status(message: str):
    """Progress line on stderr so data written to stdout stays clean"""
    if config.VERBOSE:
        print(message, file=sys.stderr)


class ZeroStore:
    """
    Manages zero tables keyed by the Bessel index
    A single lock serializes growth, so each table has exactly one writer
    """

    def __init__(self, cache_dir: Optional[Path] = None):
        """
        Initialize the store

        Args:
            cache_dir: Directory for persisted tables (defaults to config; None keeps tables in memory)
        """
        self.cache_dir = Path(cache_dir) if cache_dir else config.ZERO_CACHE_DIR
        self._tables: Dict[float, ZeroTable] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _table_path(self, mu: float) -> Path:
        return self.cache_dir / f"zeros_{config.ZERO_TABLE_FORMAT_VERSION}_mu{mu!r}.txt"

    def _load(self, mu: float) -> Optional[ZeroTable]:
        if self.cache_dir is None:
            return None
        path = self._table_path(mu)
        if not path.is_file():
            return None
        try:
            table = ZeroTable.from_text(path.read_text())
        except (ValueError, KeyError) as e:
            status(f"⚠️  Ignoring unreadable zero table {path.name}: {e}")
            return None
        if table.mu != mu:
            status(f"⚠️  Ignoring zero table {path.name}: header says mu={table.mu}")
            return None
        status(f"✓ Loaded {len(table)} zeros for mu={mu!r} from {path}")
        return table

    def _save(self, table: ZeroTable):
        if self.cache_dir is None:
            return
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            path = self._table_path(table.mu)
            scratch = path.with_suffix(".tmp")
            scratch.write_text(table.to_text())
            scratch.replace(path)
        except OSError as e:
            status(f"⚠️  Could not persist zero table for mu={table.mu!r}: {e}")

    def get(self, mu: float, n: int) -> ZeroTable:
        """
        Return a table with at least n zeros of J_mu, computing only the missing ones

        Args:
            mu: Bessel index, mu > -1
            n: Number of zeros required

        Returns:
            ZeroTable (possibly longer than n)
        """
        with self._lock:
            table = self._tables.get(mu)
            if table is None:
                table = self._load(mu)
            if table is not None and len(table) >= n:
                self.hits += 1
                self._tables[mu] = table
                return table

            self.misses += 1
            # Grow geometrically so repeated small requests stay cheap
            target = max(n, 2 * len(table)) if table is not None else n
            table = bessel_zeros(mu, target, table)
            self._tables[mu] = table
            self._save(table)
            return table

    def clear(self, mu: Optional[float] = None):
        """
        Drop cached tables from memory and disk

        Args:
            mu: Index to clear (None clears everything)
        """
        with self._lock:
            keys = list(self._tables) if mu is None else [mu]
            for key in keys:
                self._tables.pop(key, None)
            if self.cache_dir is None or not self.cache_dir.is_dir():
                return
            pattern = f"zeros_{config.ZERO_TABLE_FORMAT_VERSION}_mu*.txt" if mu is None else self._table_path(mu).name
            for path in self.cache_dir.glob(pattern):
                path.unlink()
        status(f"✓ Cleared zero tables ({'all' if mu is None else f'mu={mu!r}'})")

    def get_stats(self) -> Dict:
        """Statistics about the cached tables"""
        with self._lock:
            return {
                "tables": {repr(mu): len(table) for mu, table in self._tables.items()},
                "hits": self.hits,
                "misses": self.misses,
                "cache_dir": str(self.cache_dir) if self.cache_dir else None,
            }


_STORE: Optional[ZeroStore] = None
_STORE_LOCK = threading.Lock()


def get_zero_store() -> ZeroStore:
    """Process-wide store shared by kernels, exit laws and the simulator"""
    global _STORE
    with _STORE_LOCK:
        if _STORE is None:
            _STORE = ZeroStore()
        return _STORE


def configure_zero_store(cache_dir: Optional[Path]) -> ZeroStore:
    """Replace the process-wide store, e.g. to persist under a command-line cache directory"""
    global _STORE
    with _STORE_LOCK:
        _STORE = ZeroStore(cache_dir)
        return _STORE
