"""Categorical metadata embedding and projection to the shared feature width."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .layers import Linear, collect_named, fan_in_uniform
from .rng import RngState
from .tensor import ShapeError, Tensor

log = logging.getLogger(__name__)

META_EMBED_DIM = 256
UNKNOWN = "<unk>"
UNKNOWN_INDEX = 0


def default_embed_dim(vocab_size: int) -> int:
    return min(16, -(-vocab_size // 2))


@dataclass(frozen=True)
class FieldSpec:
    name: str
    vocab: tuple  # index 0 is always the UNKNOWN token
    embed_dim: int

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)


@dataclass(frozen=True)
class MetadataSchema:
    """Ordered categorical field definitions. The prediction target must never
    appear as a field (leakage guard, enforced at build time)."""

    fields: tuple = field(default_factory=tuple)

    def __post_init__(self):
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate field names in schema: {names}")
        for f in self.fields:
            if f.vocab_size < 2:
                raise ValueError(
                    f"field {f.name!r} needs at least one real value plus {UNKNOWN!r}")
            if f.vocab[UNKNOWN_INDEX] != UNKNOWN:
                raise ValueError(f"field {f.name!r} must reserve index 0 for {UNKNOWN!r}")

    def field_names(self):
        return [f.name for f in self.fields]

    def to_dict(self) -> dict:
        return {"fields": [{"name": f.name, "vocab": list(f.vocab), "embed_dim": f.embed_dim}
                           for f in self.fields]}

    @staticmethod
    def from_dict(d: dict) -> "MetadataSchema":
        return MetadataSchema(tuple(
            FieldSpec(f["name"], tuple(f["vocab"]), int(f["embed_dim"])) for f in d["fields"]))


def build_schema(field_values: dict, target_field: str | None = None) -> MetadataSchema:
    """Build a schema from training-split raw values.

    Vocabulary is exact-match over the observed strings (no normalization),
    sorted for run-to-run stability, with the UNKNOWN token at index 0. Any
    field named like the prediction target is dropped and flagged.
    """
    specs = []
    for name, values in field_values.items():
        if target_field is not None and name == target_field:
            log.warning("metadata field %r matches the prediction target; excluded "
                        "to prevent label leakage", name)
            continue
        distinct = sorted({v for v in values if v != ""})
        vocab = (UNKNOWN,) + tuple(distinct)
        specs.append(FieldSpec(name, vocab, default_embed_dim(len(vocab))))
    return MetadataSchema(tuple(specs))


def map_unknown(raw: str, spec: FieldSpec) -> int:
    """Known values map to their vocabulary index; missing or unseen values
    map to the UNKNOWN index. Matching is exact (case-sensitive)."""
    try:
        return spec.vocab.index(raw) if raw != "" else UNKNOWN_INDEX
    except ValueError:
        return UNKNOWN_INDEX


def encode_rows(schema: MetadataSchema, rows: dict) -> np.ndarray:
    """Map raw per-field string lists to an (N, F) index array."""
    cols = []
    for spec in schema.fields:
        values = rows[spec.name]
        lut = {v: i for i, v in enumerate(spec.vocab)}
        cols.append(np.array([lut.get(v, UNKNOWN_INDEX) if v != "" else UNKNOWN_INDEX
                              for v in values], dtype=np.int64))
    return np.stack(cols, axis=1) if cols else np.zeros((0, 0), dtype=np.int64)


class MetadataEncoder:
    """Per-field embedding tables feeding a two-layer projection to width 256."""

    def __init__(self, rng: RngState, schema: MetadataSchema, hidden: int = 256):
        self.schema = schema
        self.tables = []
        for spec in schema.fields:
            t = fan_in_uniform(rng.split(f"table.{spec.name}"),
                               (spec.vocab_size, spec.embed_dim), spec.embed_dim)
            self.tables.append(t)
        total = sum(spec.embed_dim for spec in schema.fields)
        self.fc1 = Linear(rng.split("fc1"), total, hidden)
        self.fc2 = Linear(rng.split("fc2"), hidden, META_EMBED_DIM)
        self.hidden = hidden

    def forward(self, rows: np.ndarray) -> Tensor:
        """rows: (N, F) integer field indices -> (N, 256) embedding."""
        n, f = rows.shape
        if f != len(self.schema.fields):
            raise ShapeError(f"got {f} metadata columns for {len(self.schema.fields)} fields")
        parts = []
        for j, (spec, table) in enumerate(zip(self.schema.fields, self.tables)):
            parts.append(T.embedding_lookup(rows[:, j], table, field_name=spec.name))
        joined = T.concat(parts, axis=1) if len(parts) > 1 else parts[0]
        return self.fc2.forward(T.relu(self.fc1.forward(joined)))

    def named_params(self):
        out = []
        for spec, table in zip(self.schema.fields, self.tables):
            out.append((f"tables.{spec.name}", table))
        out.extend(collect_named("fc1", self.fc1))
        out.extend(collect_named("fc2", self.fc2))
        return out

    def named_buffers(self):
        return []
