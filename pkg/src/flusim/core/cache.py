"""Population cache for skipping repeated synthesis.

Synthesized populations are pure functions of their inputs, so a dump keyed
by those inputs can be reused across scenario runs that share them.
"""

import hashlib
import json
import tempfile
from collections.abc import Sequence
from datetime import datetime
from pathlib import Path
from typing import Any

from flusim.core.exceptions import ParameterError
from flusim.core.logging import get_logger
from flusim.core.population import Agent, PopulationParams, dump_population, load_population

logger = get_logger(__name__)


class PopulationCache:
    """File cache of population CSV dumps with a JSON index.

    Entries are keyed by a SHA-256 of (n, landscape_side, seed, params).
    """

    def __init__(self, cache_dir: Path | None = None) -> None:
        self.cache_dir = cache_dir or Path(".flusim_cache")
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.index_path = self.cache_dir / "index.json"
        self._index: dict[str, dict[str, Any]] = self._load_index()

    def _load_index(self) -> dict[str, dict[str, Any]]:
        try:
            data: dict[str, dict[str, Any]] = json.loads(
                self.index_path.read_text(encoding="utf-8")
            )
            return data
        except (json.JSONDecodeError, OSError):
            return {}

    def _save_index(self) -> None:
        """Atomic write: temp file in the cache dir, then replace."""
        try:
            temp_fd, temp_path = tempfile.mkstemp(dir=self.cache_dir, suffix=".tmp")
            try:
                with open(temp_fd, "w", encoding="utf-8") as f:
                    json.dump(self._index, f, ensure_ascii=False, indent=2)
                Path(temp_path).replace(self.index_path)
            except Exception:
                Path(temp_path).unlink(missing_ok=True)
                raise
        except OSError as e:
            logger.warning(f"Could not write cache index {self.index_path}: {e}")

    @staticmethod
    def key_for(
        n: int, landscape_side: float, seed: int, params: PopulationParams | None = None
    ) -> str:
        """Cache key of one synthesis input."""
        payload = json.dumps(
            {
                "n": n,
                "landscape_side": float(landscape_side),
                "seed": seed,
                "params": (params or PopulationParams()).model_dump(mode="json"),
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:32]

    def _file(self, key: str) -> Path:
        return self.cache_dir / f"{key}.csv"

    def get(
        self, n: int, landscape_side: float, seed: int, params: PopulationParams | None = None
    ) -> list[Agent] | None:
        """Cached population, or None on a miss or unreadable entry."""
        key = self.key_for(n, landscape_side, seed, params)
        if key not in self._index:
            return None
        try:
            agents = load_population(self._file(key))
        except (OSError, ParameterError, ValueError) as e:
            logger.warning(f"Dropping unreadable cache entry {key}: {e}")
            self._index.pop(key, None)
            self._save_index()
            return None
        logger.debug(f"Population cache hit {key} (n={n}, seed={seed})")
        return agents

    def set(
        self,
        agents: Sequence[Agent],
        landscape_side: float,
        seed: int,
        params: PopulationParams | None = None,
    ) -> str | None:
        """Store a population; returns its key, or None when the write fails."""
        key = self.key_for(len(agents), landscape_side, seed, params)
        try:
            dump_population(agents, self._file(key))
        except OSError as e:
            logger.warning(f"Could not cache population {key}: {e}")
            return None
        self._index[key] = {
            "n": len(agents),
            "landscape_side": float(landscape_side),
            "seed": seed,
            "cached_at": datetime.now().isoformat(),
        }
        self._save_index()
        return key

    def invalidate(
        self, n: int, landscape_side: float, seed: int, params: PopulationParams | None = None
    ) -> bool:
        """Remove one entry; False if it was not cached."""
        key = self.key_for(n, landscape_side, seed, params)
        if key not in self._index:
            return False
        self._index.pop(key)
        self._file(key).unlink(missing_ok=True)
        self._save_index()
        return True

    def clear(self) -> int:
        """Remove every entry; returns how many were removed."""
        count = len(self._index)
        for key in self._index:
            try:
                self._file(key).unlink(missing_ok=True)
            except OSError:
                pass
        self._index = {}
        self._save_index()
        return count

    def stats(self) -> dict[str, Any]:
        total_size = 0
        for key in self._index:
            try:
                total_size += self._file(key).stat().st_size
            except OSError:
                pass
        return {
            "entries": len(self._index),
            "total_size_bytes": total_size,
            "cache_dir": str(self.cache_dir),
        }
