"""JSON run configuration: a builtin type name or an explicit Cartan datum."""

import json
import logging
from pathlib import Path

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

import config
from builtin_types import get_builtin
from cartan_core import CartanDatum, validate_datum
from errors import ConfigError

logger = logging.getLogger(__name__)


class RunConfig(BaseModel):
    """Fields of a config file; either ``type`` or the explicit triple is required."""

    model_config = ConfigDict(extra="forbid")

    type: str | None = None
    cartan: list[list[int]] | None = None
    symmetrizer: list[int] | None = None
    orientation: list[tuple[int, int]] | None = None
    primes: list[int] | None = None
    rng_seed: int = config.RNG_SEED
    cache_dir: str | None = None

    @model_validator(mode="after")
    def _type_or_triple(self) -> "RunConfig":
        explicit = [self.cartan, self.symmetrizer, self.orientation]
        if self.type is None and any(x is None for x in explicit):
            raise ValueError("give either 'type' or all of 'cartan', 'symmetrizer', 'orientation'")
        if self.type is not None and any(x is not None for x in explicit):
            raise ValueError("'type' cannot be combined with an explicit cartan/symmetrizer/orientation")
        return self

    def datum(self) -> CartanDatum:
        if self.type is not None:
            try:
                return get_builtin(self.type).datum()
            except KeyError as exc:
                raise ConfigError(str(exc.args[0])) from exc
        return validate_datum(self.cartan, self.symmetrizer, self.orientation)


def _format_validation_error(exc: ValidationError) -> str:
    problems = []
    for err in exc.errors():
        where = ".".join(str(part) for part in err["loc"]) or "<root>"
        problems.append(f"{where}: {err['msg']}")
    return "; ".join(problems)


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {_format_validation_error(exc)}") from exc


def load_run_config(path: str | Path) -> RunConfig:
    """Read and validate a UTF-8 JSON config file.

    Raises:
        ConfigError: unreadable file, JSON syntax error (with line and
            column) or a field that fails validation (with its path).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    run_config = parse_run_config(text, str(path))
    logger.info("Loaded run config from %s", path)
    return run_config
