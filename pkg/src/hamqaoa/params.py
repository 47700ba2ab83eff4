"""Angle schedules for the layered circuit.

A schedule of depth ``p`` holds four length-``p`` angle sequences
``(alpha, beta, gamma, delta)`` that drive the ZZ, X, Z and D layers.
The flat vector layout used by the optimizers is ``[alpha | beta | gamma | delta]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NAMES = ("alpha", "beta", "gamma", "delta")


def wrap_angle(x):
    """Map angles into (-pi/2, pi/2] using the period pi."""
    x = np.asarray(x, dtype=float)
    y = np.mod(x + np.pi / 2, np.pi) - np.pi / 2
    # mod lands exactly on -pi/2 for odd multiples of pi/2; keep the closed end
    return np.where(y <= -np.pi / 2, y + np.pi, y)


@dataclass(frozen=True, eq=False)
class ParamSchedule:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        arrays = []
        for name in NAMES:
            a = np.array(getattr(self, name), dtype=float).reshape(-1)
            a.setflags(write=False)
            arrays.append(a)
            object.__setattr__(self, name, a)
        p = len(arrays[0])
        if any(len(a) != p for a in arrays):
            raise ValueError("alpha, beta, gamma, delta must all have length p")
        if p < 1:
            raise ValueError("depth p must be at least 1")
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise ValueError("angles must be finite")

    @property
    def p(self) -> int:
        return len(self.alpha)

    @classmethod
    def zeros(cls, p: int) -> "ParamSchedule":
        z = np.zeros(p)
        return cls(z, z, z, z)

    @classmethod
    def from_vector(cls, x) -> "ParamSchedule":
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or len(x) % 4 or len(x) == 0:
            raise ValueError("flat parameter vector must have length 4p")
        return cls(*x.reshape(4, -1))

    @classmethod
    def from_rows(cls, rows) -> "ParamSchedule":
        """Build from per-layer rows ``(alpha_j, beta_j, gamma_j, delta_j)``."""
        rows = np.asarray(rows, dtype=float).reshape(-1, 4)
        return cls(*rows.T)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta, self.gamma, self.delta])

    def rows(self) -> np.ndarray:
        return np.stack([self.alpha, self.beta, self.gamma, self.delta], axis=1)

    def canonicalize(self) -> "ParamSchedule":
        """Explicitly wrap every angle into (-pi/2, pi/2]."""
        return ParamSchedule.from_vector(wrap_angle(self.to_vector()))

    def insert_zero_layer(self, position: int | None = None) -> "ParamSchedule":
        """Insert an identity layer before ``position`` (default: append)."""
        pos = self.p if position is None else position
        if not 0 <= pos <= self.p:
            raise ValueError(f"insertion position {pos} outside [0, {self.p}]")
        rows = np.insert(self.rows(), pos, 0.0, axis=0)
        return ParamSchedule.from_rows(rows)

    def __neg__(self) -> "ParamSchedule":
        return ParamSchedule.from_vector(-self.to_vector())

    def mirrored(self) -> "ParamSchedule":
        """``(alpha, -beta, gamma, -delta)``: the same circuit written with ``exp(+i beta B)`` and ``exp(+i delta D)``.

        Some published angle tables use that convention; applying this map
        (an involution) converts them to the one used throughout the package.
        """
        return ParamSchedule(self.alpha, -self.beta, self.gamma, -self.delta)

    def allclose(self, other: "ParamSchedule", atol: float = 1e-12) -> bool:
        return self.p == other.p and np.allclose(self.to_vector(), other.to_vector(), atol=atol, rtol=0)

    def to_dict(self) -> dict:
        return {name: [float(v) for v in getattr(self, name)] for name in NAMES}

    @classmethod
    def from_dict(cls, data: dict) -> "ParamSchedule":
        missing = [k for k in NAMES if k not in data]
        if missing:
            raise ValueError(f"params JSON missing fields: {', '.join(missing)}")
        return cls(*(data[k] for k in NAMES))

    @classmethod
    def load(cls, path) -> "ParamSchedule":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __repr__(self) -> str:
        return f"ParamSchedule(p={self.p}, rows={self.rows().round(4).tolist()})"
