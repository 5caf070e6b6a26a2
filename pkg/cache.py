"""Append-only cache of submodule point counts and searched modules.

One JSON record per line in ``<cache dir>/counts.jsonl``. Count hits are
spot-checked: a deterministic fraction of them is recomputed by the caller
and compared. Modules found by the rigid search are kept in
``<cache dir>/modules.jsonl`` so later runs count over the same module.
"""

import json
import logging
import random
import threading
from datetime import datetime, timezone
from pathlib import Path

from pydantic import BaseModel, ValidationError

import config
from errors import ConfigError

logger = logging.getLogger(__name__)

CACHE_FILE = "counts.jsonl"
MODULE_FILE = "modules.jsonl"


class CacheEntry(BaseModel):
    """A single cached count."""

    key: str
    value: int
    created_at: str
    code_version: str


class ModuleEntry(BaseModel):
    """A module in the ``module_to_dict`` serialization."""

    key: str
    module: dict
    created_at: str
    code_version: str


def count_key(datum_label: str, spec_label: str, r, q: int, rng_seed: int) -> str:
    return json.dumps(
        {"datum": datum_label, "spec": spec_label, "r": list(r), "q": q, "seed": rng_seed},
        sort_keys=True,
    )


def module_key(datum_label: str, spec_label: str, q: int, rng_seed: int) -> str:
    return json.dumps({"datum": datum_label, "spec": spec_label, "q": q, "seed": rng_seed}, sort_keys=True)


class CountCache:
    """Counts keyed by (datum, module spec, r, q, seed)."""

    def __init__(self, directory: Path, spot_check_rate: float = config.CACHE_SPOT_CHECK_RATE,
                 seed: int = config.RNG_SEED) -> None:
        self.path = Path(directory) / CACHE_FILE
        self.module_path = Path(directory) / MODULE_FILE
        self.spot_check_rate = spot_check_rate
        self._rng = random.Random(seed)
        self._entries: dict[str, int] = {}
        self._modules: dict[str, dict] = {}
        self._lock = threading.Lock()
        self._load()

    @staticmethod
    def _records(path: Path, model: type[BaseModel]):
        """Current-version records of one JSON-lines file."""
        if not path.exists():
            return
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                entry = model.model_validate_json(line)
            except ValidationError as exc:
                raise ConfigError(f"{path}:{lineno}: malformed cache record: {exc}") from exc
            if entry.code_version == config.CODE_VERSION:
                yield entry

    def _load(self) -> None:
        for entry in self._records(self.path, CacheEntry):
            self._entries[entry.key] = entry.value
        for entry in self._records(self.module_path, ModuleEntry):
            self._modules[entry.key] = entry.module
        if self._entries or self._modules:
            logger.info("Loaded %d cached counts and %d modules from %s",
                        len(self._entries), len(self._modules), self.path.parent)

    def _append(self, path: Path, entry: BaseModel) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as fh:
            fh.write(entry.model_dump_json() + "\n")

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> int | None:
        return self._entries.get(key)

    def should_spot_check(self, key: str) -> bool:
        with self._lock:
            return self._rng.random() < self.spot_check_rate

    def put(self, key: str, value: int) -> None:
        entry = CacheEntry(
            key=key,
            value=value,
            created_at=datetime.now(timezone.utc).isoformat(),
            code_version=config.CODE_VERSION,
        )
        with self._lock:
            self._append(self.path, entry)
            self._entries[key] = value

    def get_module(self, key: str) -> dict | None:
        return self._modules.get(key)

    def put_module(self, key: str, module: dict) -> None:
        entry = ModuleEntry(
            key=key,
            module=module,
            created_at=datetime.now(timezone.utc).isoformat(),
            code_version=config.CODE_VERSION,
        )
        with self._lock:
            if key in self._modules:
                return
            self._append(self.module_path, entry)
            self._modules[key] = module


_active: CountCache | None = None


def configure(directory: str | Path | None) -> CountCache | None:
    """Install (or with a falsy directory, remove) the process-wide cache."""
    global _active
    _active = CountCache(Path(directory)) if directory else None
    return _active


def active_cache() -> CountCache | None:
    return _active
