"""Large-degree limit of the tree iteration.

With ``alpha = alpha_tilde / sqrt(d)``, every ``gamma = 0``, every ``beta`` a
multiple of ``pi/4`` and X-eigenstate initial states, the rescaled edge value

    nu_{p,d}(sigma, sigma') = -(sqrt(d)/2) E<sigma_L sigma'_R>

converges as ``d -> inf``. The limit only needs a chain of ``(2p+2) x (2p+2)``
second-moment matrices ``G^(0..p-1)`` and two vectors ``K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import formula_finite as ff
from .params import ParamSchedule

MAX_P = 10
QUARTER = np.pi / 4


@dataclass(frozen=True, eq=False)
class RescaledParams:
    """``(alpha_tilde, beta, delta)`` with ``gamma`` fixed to zero."""

    alpha_tilde: np.ndarray
    beta: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        for name in ("alpha_tilde", "beta", "delta"):
            a = np.array(getattr(self, name), dtype=float).reshape(-1)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not (len(self.alpha_tilde) == len(self.beta) == len(self.delta)) or len(self.beta) == 0:
            raise ValueError("alpha_tilde, beta, delta must share a positive length p")

    @property
    def p(self) -> int:
        return len(self.beta)

    @classmethod
    def from_quarters(cls, alpha_tilde, beta_quarters, delta) -> "RescaledParams":
        """Build with ``beta`` given as integer multiples of pi/4."""
        return cls(alpha_tilde, np.asarray(beta_quarters, dtype=float) * QUARTER, delta)

    def schedule(self, d: float = 1.0) -> ParamSchedule:
        """The finite-degree schedule with ``alpha = alpha_tilde / sqrt(d)``."""
        return ParamSchedule(self.alpha_tilde / np.sqrt(d), self.beta, np.zeros(self.p), self.delta)

    @classmethod
    def from_schedule(cls, theta: ParamSchedule, d: float) -> "RescaledParams":
        return cls(theta.alpha * np.sqrt(d), theta.beta, theta.delta)

    def to_dict(self) -> dict:
        return {"alpha_tilde": self.alpha_tilde.tolist(),
                "beta": np.round(self.beta / QUARTER).astype(int).tolist(),
                "delta": self.delta.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "RescaledParams":
        return cls.from_quarters(data["alpha_tilde"], data["beta"], data["delta"])


def violations(params: RescaledParams, dist: ff.Distribution | None = None) -> list:
    """List of human-readable restriction violations (empty when valid)."""
    out = []
    k = params.beta / QUARTER
    bad = np.flatnonzero(np.abs(k - np.round(k)) > 1e-12)
    if len(bad):
        out.append(f"beta entries {bad.tolist()} are not multiples of pi/4")
    if not np.all(np.isfinite(params.alpha_tilde)) or not np.all(np.isfinite(params.delta)):
        out.append("non-finite angles")
    if dist is not None:
        off = np.flatnonzero(np.abs(np.abs(dist.m[:, 0]) - 1) > 1e-12)
        if len(off):
            out.append(f"initial-state support points {off.tolist()} are off the x axis")
    if params.p > MAX_P:
        out.append(f"p={params.p} exceeds limit {MAX_P}")
    return out


def validate(params: RescaledParams, dist: ff.Distribution | None = None) -> bool:
    problems = violations(params, dist)
    if problems:
        raise ValueError("; ".join(problems))
    return True


def validate_schedule(theta: ParamSchedule, dist: ff.Distribution | None = None) -> RescaledParams:
    """Check that a full schedule obeys the restrictions (``gamma = 0`` included)."""
    if np.any(theta.gamma != 0):
        raise ValueError(f"gamma entries {np.flatnonzero(theta.gamma).tolist()} are not zero")
    params = RescaledParams(theta.alpha, theta.beta, theta.delta)
    validate(params, dist)
    return params


def rescaled_phase(params: RescaledParams) -> np.ndarray:
    """``A_tilde`` in bit-path storage order."""
    a = params.alpha_tilde
    return np.concatenate([a, [0.0, 0.0], -a[::-1]])


def _tables(params: RescaledParams, dist, labels):
    theta = params.schedule()
    return {s: ff.fbar_table(s, theta, dist) for s in labels}


def _weight(G: np.ndarray, at: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``exp(-1/2 sum_jk G_jk a_j a_k z_j z_k)`` for every row of ``z``."""
    w = z * at
    return np.exp(-0.5 * np.einsum("ij,jk,ik->i", w, G, w))


def g_sequence(params: RescaledParams, dist: ff.Distribution | None = None, fbar_I=None) -> list:
    """``[G^(0), ..., G^(p-1)]`` with ``G^(0)`` the plain second moments of ``fbar^I``."""
    validate(params, dist)
    dist = ff.signed_x() if dist is None else dist
    z = ff.z_table(params.p).astype(float)
    fI = _tables(params, dist, "I")["I"] if fbar_I is None else fbar_I
    at = rescaled_phase(params)
    Gs = [(z * fI[:, None]).T @ z]
    for _ in range(1, params.p):
        h = _weight(Gs[-1], at, z)
        Gs.append((z * (fI * h)[:, None]).T @ z)
    return Gs


def h_limit(params: RescaledParams, dist: ff.Distribution | None = None) -> np.ndarray:
    """Limit ``H^(p)`` as a table over bit paths."""
    Gs = g_sequence(params, dist)
    z = ff.z_table(params.p).astype(float)
    return _weight(Gs[-1], rescaled_phase(params), z)


def k_vector(params: RescaledParams, sigma: str, dist: ff.Distribution | None = None,
             tables=None) -> np.ndarray:
    dist = ff.signed_x() if dist is None else dist
    tables = _tables(params, dist, {"I", sigma}) if tables is None else tables
    Gs = g_sequence(params, dist, fbar_I=tables["I"])
    z = ff.z_table(params.p).astype(float)
    h = _weight(Gs[-1], rescaled_phase(params), z)
    return (tables[sigma] * h) @ z


def nu(params: RescaledParams, sigma_L: str, sigma_R: str, dist: ff.Distribution | None = None,
       tables=None, sign: int = ff.PHASE_SIGN) -> float:
    """``lim_d nu_{p,d}``; zero whenever either label is X."""
    if "X" in (sigma_L, sigma_R):
        return 0.0
    if sigma_L not in "YZ" or sigma_R not in "YZ":
        raise ValueError("labels must be X, Y or Z")
    dist = ff.signed_x() if dist is None else dist
    tables = _tables(params, dist, {"I", sigma_L, sigma_R}) if tables is None else tables
    Gs = g_sequence(params, dist, fbar_I=tables["I"])
    z = ff.z_table(params.p).astype(float)
    at = rescaled_phase(params)
    h = _weight(Gs[-1], at, z)
    KL = (tables[sigma_L] * h) @ z
    KR = KL if sigma_R == sigma_L else (tables[sigma_R] * h) @ z
    # first-order term of -(sqrt(d)/2) sum exp(i sign A.(zL zR)/sqrt(d)) ...
    val = -0.5j * sign * np.sum(at * KL * KR)
    if abs(val.imag) > 1e-9:
        raise ArithmeticError(f"nu({sigma_L}{sigma_R}) has imaginary part {val.imag:.3e}")
    return float(val.real)


def heisenberg_objective(params: RescaledParams, dist: ff.Distribution | None = None) -> float:
    """``nu(X,X) + nu(Y,Y) + nu(Z,Z)``; the X term is identically zero."""
    dist = ff.signed_x() if dist is None else dist
    tables = _tables(params, dist, {"I", "Y", "Z"})
    return nu(params, "Y", "Y", dist, tables) + nu(params, "Z", "Z", dist, tables)


def finite_nu_sum(params: RescaledParams, d: int, dist: ff.Distribution | None = None) -> float:
    """``-(sqrt(d)/2) E<XX + YY + ZZ>`` from the finite-degree iteration."""
    ev = ff.edge_expectations(["XX", "YY", "ZZ"], params.schedule(d), d, dist)
    return -0.5 * np.sqrt(d) * (ev["XX"] + ev["YY"] + ev["ZZ"])


def consistency_with_finite(params: RescaledParams, d: int, dist: ff.Distribution | None = None) -> dict:
    """Compare the limit objective with the finite-``d`` value at ``alpha = alpha_tilde/sqrt(d)``."""
    inf_val = heisenberg_objective(params, dist)
    fin_val = finite_nu_sum(params, d, dist)
    # energies: finite-d QMC edge energy 1/2 - 1/2 E<...> = 1/2 + fin/sqrt(d)
    return {
        "d": d,
        "nu_infinite": inf_val,
        "nu_finite": fin_val,
        "predicted_sum": -2 * inf_val / np.sqrt(d),
        "finite_sum": -2 * fin_val / np.sqrt(d),
        "relative_deviation": abs(fin_val - inf_val) / max(abs(inf_val), 1e-300),
    }
