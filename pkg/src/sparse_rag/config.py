"""Engine configuration and its INI-style file format."""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from pathlib import Path

from sparse_rag.dense import Metric
from sparse_rag.partition import Criterion
from sparse_rag.pipeline import PipelineConfig


class ConfigError(ValueError):
    pass


def _opt(section: str, default, **kwargs):
    return field(default=default, metadata={"section": section}, **kwargs)


@dataclass(frozen=True)
class EngineConfig:
    chunk_size: int = _opt("chunking", 256)
    overlap: int = _opt("chunking", 32)

    provider: str = _opt("embedding", "local")
    dim: int = _opt("embedding", 256)
    seed: int = _opt("embedding", 0)
    embedding_endpoint: str = _opt("embedding", "")
    embedding_api_key_env: str = _opt("embedding", "")
    batch_size: int = _opt("embedding", 64)

    k1: float = _opt("lexical", 1.2)
    b: float = _opt("lexical", 0.75)

    bm25_weight: float = _opt("fusion", 0.5)
    dense_weight: float = _opt("fusion", 0.5)
    rrf_k: float = _opt("fusion", 60.0)

    top_k: int = _opt("retrieval", 5)
    distance_top_k: int = _opt("retrieval", 5)
    fallback_metric: str = _opt("retrieval", Metric.EUCLIDEAN.value)
    fallback_enabled: bool = _opt("retrieval", True)

    tau: float = _opt("partition", 0.8)
    criterion: str = _opt("partition", Criterion.EMBEDDING_SIMILARITY.value)

    llm: str = _opt("llm", "local")
    llm_endpoint: str = _opt("llm", "")
    llm_api_key_env: str = _opt("llm", "")

    delay: float = _opt("ingest", 0.1)

    def __post_init__(self):
        problems = []
        if self.chunk_size <= 0:
            problems.append("chunk_size must be positive")
        if not 0 <= self.overlap < self.chunk_size:
            problems.append("overlap must satisfy 0 <= overlap < chunk_size")
        if self.provider not in ("local", "remote"):
            problems.append("provider must be 'local' or 'remote'")
        if self.llm not in ("local", "remote"):
            problems.append("llm must be 'local' or 'remote'")
        if self.dim <= 0 or self.batch_size <= 0:
            problems.append("dim and batch_size must be positive")
        if self.k1 <= 0 or not 0 <= self.b <= 1:
            problems.append("need k1 > 0 and 0 <= b <= 1")
        if self.bm25_weight < 0 or self.dense_weight < 0 or self.bm25_weight + self.dense_weight == 0:
            problems.append("fusion weights must be non-negative and not all zero")
        if self.rrf_k <= 0:
            problems.append("rrf_k must be positive")
        if self.top_k < 1 or self.distance_top_k < 1:
            problems.append("top_k values must be >= 1")
        if not 0 <= self.tau <= 1:
            problems.append("tau must lie in [0, 1]")
        if self.delay < 0:
            problems.append("delay must be non-negative")
        try:
            Metric(self.fallback_metric)
            Criterion.parse(self.criterion)
        except ValueError as exc:
            problems.append(str(exc))
        if problems:
            raise ConfigError("; ".join(problems))

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            top_k=self.top_k,
            distance_top_k=self.distance_top_k,
            bm25_weight=self.bm25_weight,
            dense_weight=self.dense_weight,
            rrf_k=self.rrf_k,
            fallback_metric=Metric(self.fallback_metric),
            fallback_enabled=self.fallback_enabled,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)


def _convert(raw: str, kind: type, key: str):
    try:
        if kind is bool:
            lowered = raw.strip().lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None


_TYPES = {"int": int, "float": float, "str": str, "bool": bool}


def parse_config(text: str) -> EngineConfig:
    """Parse INI text; every key must belong to its declared section."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    fields = {f.name: f for f in dataclasses.fields(EngineConfig)}
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            known = fields.get(key)
            if known is None or known.metadata["section"] != section:
                raise ConfigError(f"unknown config key [{section}] {key}")
            values[key] = _convert(raw, _TYPES[known.type], key)
    return EngineConfig(**values)


def emit_config(config: EngineConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    for f in dataclasses.fields(EngineConfig):
        section = f.metadata["section"]
        if not parser.has_section(section):
            parser.add_section(section)
        value = getattr(config, f.name)
        parser.set(section, f.name, repr(value) if isinstance(value, float) else str(value))
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def load_config(path: str | Path | None) -> EngineConfig:
    if path is None:
        return EngineConfig()
    return parse_config(Path(path).read_text(encoding="utf-8"))
