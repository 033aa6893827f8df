"""Pipeline configuration: a flat key=value file plus command-line overrides.

Relative paths are resolved against the config file's directory so a config
checked into a repository keeps working from any working directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .classifier import DecodingParams
from .errors import StancelabError

BACKENDS = ("live", "replay", "scripted")


class ConfigError(StancelabError):
    pass


@dataclass
class PipelineConfig:
    manifest_path: Path
    work_dir: Path
    ends_lexicon_path: Path | None = None
    evidence_lexicon_path: Path | None = None
    abbreviations_path: Path | None = None
    decoding: DecodingParams = field(default_factory=DecodingParams)
    retry_limit: int = 3
    concurrency_limit: int = 4
    seed: int = 0
    backend: str = "replay"
    scripted_fixture_path: Path | None = None
    annotation_sample_size: int = 200
    annotator_a: str = "A"
    annotator_b: str = "B"
    host: str = "127.0.0.1"
    port: int = 8765
    static_dir: Path | None = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.backend == "scripted" and self.scripted_fixture_path is None:
            raise ConfigError("backend=scripted requires scripted_fixture_path")
        if self.retry_limit < 0:
            raise ConfigError("retry_limit must be >= 0")
        if self.concurrency_limit < 1:
            raise ConfigError("concurrency_limit must be >= 1")
        if self.annotation_sample_size < 1:
            raise ConfigError("annotation_sample_size must be >= 1")
        if self.annotator_a == self.annotator_b:
            raise ConfigError("annotator_a and annotator_b must differ")


_PATH_KEYS = {
    "manifest_path",
    "work_dir",
    "ends_lexicon_path",
    "evidence_lexicon_path",
    "abbreviations_path",
    "scripted_fixture_path",
    "static_dir",
}
_INT_KEYS = {"retry_limit", "concurrency_limit", "seed", "annotation_sample_size", "port", "max_tokens"}
_FLOAT_KEYS = {"temperature"}
_STR_KEYS = {"backend", "annotator_a", "annotator_b", "host", "model_id"}

KNOWN_KEYS = _PATH_KEYS | _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def _parse_pairs(lines, origin: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{origin}:{lineno}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        pairs[key] = value
    return pairs


def load_config(path, overrides=()) -> PipelineConfig:
    """Parse a config file and apply --set key=value overrides on top."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    base_dir = path.parent
    pairs = _parse_pairs(path.read_text(encoding="utf-8").splitlines(), str(path))
    pairs.update(_parse_pairs(list(overrides), "--set"))

    values: dict[str, object] = {}
    for key, raw in pairs.items():
        try:
            if key in _PATH_KEYS:
                candidate = Path(raw)
                values[key] = candidate if candidate.is_absolute() else base_dir / candidate
            elif key in _INT_KEYS:
                values[key] = int(raw)
            elif key in _FLOAT_KEYS:
                values[key] = float(raw)
            else:
                values[key] = raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc

    for required in ("manifest_path", "work_dir"):
        if required not in values:
            raise ConfigError(f"config must set {required}")

    defaults = DecodingParams()
    try:
        decoding = DecodingParams(
            model_id=values.pop("model_id", defaults.model_id),
            temperature=values.pop("temperature", defaults.temperature),
            max_tokens=values.pop("max_tokens", defaults.max_tokens),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return PipelineConfig(decoding=decoding, **values)  # type: ignore[arg-type]
