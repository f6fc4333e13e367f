"""Particle containers shared by the sampler, the barycenter solvers and the metrics."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ParticleSet:
    """``M`` equally weighted particles stacked as rows of ``z``.

    Each row is ``theta (n_params entries) + weights (padded)``. ``n_live`` is the
    number of weight slots that belong to real samples; slots beyond it are padding.
    ``n_live=None`` means every weight slot is live.
    """

    z: np.ndarray
    n_params: int = 0
    n_live: int | None = None

    def __post_init__(self):
        z = np.array(self.z, dtype=float, ndmin=2)
        if z.ndim != 2 or z.shape[0] < 1:
            raise ValueError("a particle set needs at least one particle")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        if not 0 <= self.n_params <= z.shape[1]:
            raise ValueError("n_params exceeds particle dimension")
        if self.n_live is not None and not 0 <= self.n_live <= self.n_weights:
            raise ValueError("n_live exceeds the weight block")

    def __len__(self) -> int:
        return self.z.shape[0]

    @property
    def M(self) -> int:
        return self.z.shape[0]

    @property
    def dim(self) -> int:
        return self.z.shape[1]

    @property
    def n_weights(self) -> int:
        return self.dim - self.n_params

    @property
    def live(self) -> int:
        return self.n_weights if self.n_live is None else self.n_live

    @property
    def theta(self) -> np.ndarray:
        return self.z[:, : self.n_params]

    @property
    def weights(self) -> np.ndarray:
        """Live (unpadded) raw weights, shape (M, live)."""
        return self.z[:, self.n_params: self.n_params + self.live]

    def with_z(self, z) -> "ParticleSet":
        return ParticleSet(z, self.n_params, self.n_live)


def as_points(ps) -> np.ndarray:
    if isinstance(ps, ParticleSet):
        return ps.z
    z = np.asarray(ps, dtype=float)
    return z if z.ndim == 2 else np.atleast_2d(z)


def read_particles(path) -> ParticleSet:
    """Read a particle CSV with header ``z0..z{dim-1}``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    expected = [f"z{j}" for j in range(len(header))]
    if header != expected:
        raise ValueError(f"{path}: header must be z0..z{len(header) - 1}")
    body = [r for r in rows[1:] if r and any(c.strip() for c in r)]
    if not body:
        raise ValueError(f"{path}: no particles")
    try:
        z = np.array([[float(c) for c in r] for r in body])
    except ValueError:
        raise ValueError(f"{path}: non-numeric entry") from None
    if z.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows")
    return ParticleSet(z)


def format_particles(ps) -> str:
    z = as_points(ps)
    lines = [",".join(f"z{j}" for j in range(z.shape[1]))]
    lines += [",".join(repr(float(v)) for v in row) for row in z]
    return "\n".join(lines) + "\n"
