"""TOML configuration: loading, model sections and strict key checking."""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .models import mixed_field_ising, transverse_chain
from .pauli import HamiltonianModel, PauliError, parse_hamiltonian
from .sql import SqlConfig

BUILTIN_MODELS = ("chain", "mfim")


class ConfigError(ValueError):
    pass


def check_keys(section: dict, allowed: set[str] | frozenset[str], where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"[{where}] must be a table")
    extra = sorted(set(section) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(extra)}")


def load_toml(path: str | Path) -> dict:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None


@dataclass(frozen=True)
class ModelSpec:
    """Exactly one of inline ``terms``, a Hamiltonian text ``file`` or a builtin ``name``."""

    terms: tuple[str, ...] | None = None
    params: tuple[float, ...] | None = None
    file: str | None = None
    name: str | None = None
    n: int | None = None

    @property
    def has_params(self) -> bool:
        return self.params is not None or self.file is not None or self.name == "mfim"

    def build(self) -> HamiltonianModel:
        try:
            if self.file is not None:
                try:
                    text = Path(self.file).read_text()
                except OSError as exc:
                    raise ConfigError(f"cannot read model file {self.file}: {exc.strerror}") from None
                return parse_hamiltonian(text)
            if self.name == "chain":
                return transverse_chain(self.n, self.params)
            if self.name == "mfim":
                return mixed_field_ising(self.n)
            return HamiltonianModel.from_strings(self.terms, self.params)
        except PauliError as exc:
            raise ConfigError(f"bad model: {exc}") from None


def parse_model(section: Any, base: Path | None = None) -> ModelSpec:
    check_keys(section, {"terms", "params", "file", "name", "n"}, "model")
    given = [k for k in ("terms", "file", "name") if k in section]
    if len(given) != 1:
        raise ConfigError("[model] needs exactly one of 'terms', 'file' or 'name'")
    params = section.get("params")
    if params is not None:
        if "file" in section:
            raise ConfigError("[model] 'params' cannot be combined with 'file'")
        try:
            params = tuple(float(x) for x in params)
        except (TypeError, ValueError):
            raise ConfigError("[model] 'params' must be a list of numbers") from None
    file = section.get("file")
    if file is not None:
        path = Path(file)
        if base is not None and not path.is_absolute():
            path = base / path
        file = str(path)
    name, n = section.get("name"), section.get("n")
    if name is not None:
        if name not in BUILTIN_MODELS:
            raise ConfigError(f"unknown builtin model {name!r}; choose from {', '.join(BUILTIN_MODELS)}")
        if not isinstance(n, int) or n < 2:
            raise ConfigError("builtin models need an integer 'n' >= 2")
    elif n is not None:
        raise ConfigError("'n' only applies to builtin models")
    terms = section.get("terms")
    if terms is not None:
        if not isinstance(terms, list) or not all(isinstance(t, str) for t in terms):
            raise ConfigError("[model] 'terms' must be a list of Pauli strings")
        terms = tuple(terms)
    return ModelSpec(terms, params, file, name, n)


def parse_sql(section: Any) -> SqlConfig:
    check_keys(section, {f.name for f in fields(SqlConfig)}, "sql")
    try:
        return SqlConfig(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [sql] section: {exc}") from None
