"""Flat parameter storage and the elementwise vector operations shared by
optimizers and problems.

Parameters live in a single float64 buffer; logical structure (layer weights,
biases) is carried by a shape manifest of (name, offset, length) entries so
that every optimizer update stays a flat elementwise expression.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError

Manifest = list[tuple[str, int, int]]


def _default_manifest(n: int) -> Manifest:
    return [("theta", 0, n)]


@dataclass(frozen=True)
class ParamVector:
    """A flat float64 parameter buffer plus its shape manifest.

    The manifest entries must tile [0, len) contiguously in order. Instances
    are treated as immutable: operations return new vectors.
    """

    data: np.ndarray
    manifest: Manifest = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        object.__setattr__(self, "data", data)
        manifest = self.manifest
        if manifest is None:
            manifest = _default_manifest(data.size)
            object.__setattr__(self, "manifest", manifest)
        offset = 0
        for name, off, length in manifest:
            if off != offset or length < 0:
                raise DimensionError(
                    f"manifest entry {name!r} at offset {off} breaks contiguity "
                    f"(expected offset {offset})"
                )
            offset += length
        if offset != data.size:
            raise DimensionError(
                f"manifest covers {offset} entries but data has {data.size}"
            )

    def __len__(self) -> int:
        return self.data.size

    def with_data(self, data: np.ndarray) -> "ParamVector":
        """Same manifest, new buffer."""
        return ParamVector(data, self.manifest)


@dataclass(frozen=True)
class GradVector:
    """A gradient buffer; pairs with a ParamVector of the same length."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", np.array(self.data, dtype=np.float64))

    def __len__(self) -> int:
        return self.data.size


def axpy(a: float, x: GradVector, y: ParamVector) -> ParamVector:
    """Return y + a*x elementwise without modifying the inputs."""
    if len(x) != len(y):
        raise DimensionError(f"axpy length mismatch: x has {len(x)}, y has {len(y)}")
    return y.with_data(y.data + a * x.data)


def elementwise_min(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """out[i] = min(x[i], y[i]); lengths must match."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise DimensionError(
            f"elementwise_min shape mismatch: {x.shape} vs {y.shape}"
        )
    return np.minimum(x, y)
