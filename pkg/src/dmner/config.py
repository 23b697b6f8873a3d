"""Pipeline configuration: flat key=value file plus flag overrides.

The file format is one ``key = value`` per line, ``#`` comment lines,
blank lines ignored.  Keys use underscores; the matching command-line
flag is the same name with dashes.  Path values in a file are resolved
relative to the file's directory, so fixture configs relocate cleanly.
Seeds must be given explicitly; there is no wall-clock default.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

PATH_KEYS = (
    "corpus", "dev", "kb", "dict_init", "phrase_list", "llm_runs",
    "store", "spans", "probs", "out_dir", "pred",
)
INT_KEYS = ("dim", "seed", "k", "t", "iter", "batch_size")
FLOAT_KEYS = ("vote_threshold", "decode_threshold")
BOOL_KEYS = ("use_llm", "use_kb_unknowns", "store_fallback", "strict_iob", "no_dev")
STR_KEYS = ("encoder",)


@dataclass
class PipelineConfig:
    corpus: Path | None = None
    dev: Path | None = None
    kb: Path | None = None
    dict_init: Path | None = None
    phrase_list: Path | None = None
    llm_runs: Path | None = None
    store: Path | None = None
    spans: Path | None = None
    probs: Path | None = None
    pred: Path | None = None
    out_dir: Path = Path("dmner-out")

    encoder: str = "hashed"
    dim: int = 64
    store_fallback: bool = False

    seed: int | None = None
    t: int = 2
    iter: int = 20
    batch_size: int = 4096

    k: int = 1
    vote_threshold: float = 0.5
    decode_threshold: float = 0.5

    use_llm: bool = False
    use_kb_unknowns: bool = False
    strict_iob: bool = False
    no_dev: bool = False

    def __post_init__(self):
        if self.encoder not in ("hashed", "store"):
            raise ConfigError(f"encoder must be 'hashed' or 'store', got {self.encoder!r}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")

    def require(self, key: str, hint: str = "") -> Path:
        value = getattr(self, key)
        if value is None:
            flag = "--" + key.replace("_", "-")
            message = f"missing required setting {key!r} (set it in the config file or via {flag})"
            if hint:
                message += f"; {hint}"
            raise ConfigError(message)
        return value

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("a seed is required (set 'seed' in the config or pass --seed)")
        return self.seed


def _parse_bool(key: str, raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _coerce(key: str, raw: str, base: Path | None):
    try:
        if key in INT_KEYS:
            return int(raw)
        if key in FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if key in BOOL_KEYS:
        return _parse_bool(key, raw)
    if key in PATH_KEYS:
        path = Path(raw)
        if base is not None and not path.is_absolute():
            path = base / path
        return path
    if key in STR_KEYS:
        return raw
    raise ConfigError(f"unknown config key {key!r}")


def read_config_file(path: Path) -> dict:
    values: dict = {}
    base = path.resolve().parent
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{line_no}: expected key = value, got {line!r}")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if not value:
            raise ConfigError(f"{path}:{line_no}: empty value for {key!r}")
        values[key] = _coerce(key, value, base)
    return values


def build_config(config_path: Path | None, overrides: dict) -> PipelineConfig:
    """File values overlaid with non-None command-line overrides."""
    values = read_config_file(config_path) if config_path else {}
    known = {f.name for f in fields(PipelineConfig)}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown setting {key!r}")
        if key in PATH_KEYS and not isinstance(value, Path):
            value = Path(value)
        values[key] = value
    return PipelineConfig(**values)
