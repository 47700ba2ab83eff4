"""Average-case two-local expectations on high-girth regular graphs at finite degree.

For a ``(d+1)``-regular graph with girth above ``2p+1`` the depth-``p`` circuit
only sees a pair of ``d``-ary trees around an edge, so edge expectations reduce
to an iteration over single-qubit "bit paths".

Bit paths
---------
A bit path is a ``+-1`` string of length ``2p+2``. Its entries carry the signed
labels ``(1, 2, ..., p+1, -(p+1), ..., -2, -1)``. It is stored as an integer
whose bit ``k`` (least significant first) holds storage position ``k``:

* positions ``k = 0..p`` carry label ``k+1``
* positions ``k = p+1..2p+1`` carry label ``-(2p+2-k)``

and a stored bit ``b`` means ``z = 1 - 2b`` (bit 0 is the ``Z = +1`` state).
This mapping is the contract for every table returned here.

Walking the storage positions in order traces the matrix-element chain

    <m|z_0> E_1[z_0,z_1] ... E_p[z_{p-1},z_p] sigma[z_p,z_{p+1}]
            E_p^dag[z_{p+1},z_{p+2}] ... E_1^dag[z_{2p},z_{2p+1}] <z_{2p+1}|m>

with ``E_j = exp(i beta_j X) exp(i gamma_j Z) exp(i delta_j n.sigma)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .params import ParamSchedule
from .simulator import I2, X, Y, Z

PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}
MAX_P = 6
MAX_D = 10**6
# Exponent sign of the edge phase exp(i * PHASE_SIGN * A.(x z)); fixed by the statevector oracle.
PHASE_SIGN = +1


# --- distributions over (m, n) ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Distribution:
    """Finite weighted support of ``(m, n)`` pairs (initial Bloch vector, D-driver axis)."""

    m: np.ndarray
    n: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.m, dtype=float))
        n = np.atleast_2d(np.asarray(self.n, dtype=float))
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if m.shape != n.shape or m.shape[1] != 3 or len(w) != len(m):
            raise ValueError("m, n must be (K, 3) arrays matching K weights")
        for a in (m, n):
            if np.any(np.abs(np.linalg.norm(a, axis=1) - 1) > 1e-12):
                raise ValueError("support vectors must be unit vectors")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "weights", w)

    @property
    def x_axis_only(self) -> bool:
        """True when every initial state is an X eigenstate."""
        return bool(np.allclose(np.abs(self.m[:, 0]), 1.0, atol=1e-12))


def signed_x() -> Distribution:
    """``m = n = +-x`` with equal probability: the simplified ansatz with random signs."""
    e = np.array([[1.0, 0, 0], [-1.0, 0, 0]])
    return Distribution(e, e, [0.5, 0.5])


def fixed(m, n=None) -> Distribution:
    n = m if n is None else n
    return Distribution([m], [n], [1.0])


def pointset(points, weights=None, independent: bool = False) -> Distribution:
    """Weighted points on the sphere with ``m = n``, or the product measure if ``independent``."""
    pts = np.asarray(points, dtype=float)
    w = np.full(len(pts), 1 / len(pts)) if weights is None else np.asarray(weights, dtype=float)
    if abs(w.sum() - 1) > 1e-12:
        raise ValueError("point weights must sum to 1")
    if not independent:
        return Distribution(pts, pts, w)
    i, j = np.meshgrid(np.arange(len(pts)), np.arange(len(pts)), indexing="ij")
    return Distribution(pts[i.ravel()], pts[j.ravel()], (w[:, None] * w[None, :]).ravel())


def load_pointset(path) -> Distribution:
    """Read ``{"points": [[x, y, z, w], ...]}``."""
    data = np.asarray(json.loads(Path(path).read_text())["points"], dtype=float)
    return pointset(data[:, :3], data[:, 3])


# --- bit path bookkeeping ------------------------------------------------------------------


def path_length(p: int) -> int:
    return 2 * p + 2


def label_of_position(p: int, k: int) -> int:
    return k + 1 if k <= p else -(2 * p + 2 - k)


def position_of_label(p: int, j: int) -> int:
    if 1 <= j <= p + 1:
        return j - 1
    if -(p + 1) <= j <= -1:
        return 2 * p + 2 + j
    raise ValueError(f"label {j} outside +-1..{p + 1}")


@lru_cache(maxsize=16)
def z_table(p: int) -> np.ndarray:
    """``(2**(2p+2), 2p+2)`` array of +-1 entries, row = bit path, column = storage position."""
    L = path_length(p)
    idx = np.arange(1 << L)[:, None]
    z = 1 - 2 * ((idx >> np.arange(L)[None, :]) & 1)
    z.setflags(write=False)
    return z


def encode(p: int, z) -> int:
    """Integer code of a bit path given in storage order."""
    z = np.asarray(z)
    if z.shape != (path_length(p),):
        raise ValueError("bit path has the wrong length")
    return int(np.sum(((1 - z) // 2) << np.arange(len(z))))


def decode(p: int, code: int) -> np.ndarray:
    return z_table(p)[code].copy()


def bitpath_T(p: int, a) -> int:
    """Largest label ``j`` with ``a_j != a_{-j}``, or 0 if the path is symmetric."""
    a = np.asarray(a)
    for j in range(p + 1, 0, -1):
        if a[position_of_label(p, j)] != a[position_of_label(p, -j)]:
            return j
    return 0


def bitpath_prime(p: int, a) -> np.ndarray:
    """Flip both ``a_j`` and ``a_{-j}`` for every ``j > T(a)``."""
    a = np.array(a)
    T = bitpath_T(p, a)
    if T == 0:
        raise ValueError("prime is undefined for symmetric bit paths")
    for j in range(T + 1, p + 2):
        a[position_of_label(p, j)] *= -1
        a[position_of_label(p, -j)] *= -1
    return a


@lru_cache(maxsize=16)
def T_values(p: int) -> np.ndarray:
    z = z_table(p)
    T = np.zeros(len(z), dtype=int)
    for j in range(1, p + 2):
        diff = z[:, position_of_label(p, j)] != z[:, position_of_label(p, -j)]
        T[diff] = j
    T.setflags(write=False)
    return T


@lru_cache(maxsize=16)
def prime_index(p: int) -> np.ndarray:
    """Code of ``a'`` for every code ``a`` (``-1`` for symmetric paths)."""
    T = T_values(p)
    codes = np.arange(1 << path_length(p))
    out = np.full(len(codes), -1)
    for t in range(1, p + 2):
        mask = 0
        for j in range(t + 1, p + 2):
            mask |= (1 << position_of_label(p, j)) | (1 << position_of_label(p, -j))
        sel = T == t
        out[sel] = codes[sel] ^ mask
    out.setflags(write=False)
    return out


def phase_vector(theta: ParamSchedule) -> np.ndarray:
    """``(alpha_1, ..., alpha_p, 0, 0, -alpha_p, ..., -alpha_1)`` in storage order."""
    a = theta.alpha
    return np.concatenate([a, [0.0, 0.0], -a[::-1]])


# --- chain functions -----------------------------------------------------------------------


def _layer(theta: ParamSchedule, j: int, axis) -> np.ndarray:
    b, c, d = theta.beta[j], theta.gamma[j], theta.delta[j]
    P = axis[0] * X + axis[1] * Y + axis[2] * Z
    eb = np.cos(b) * I2 + 1j * np.sin(b) * X
    ec = np.diag([np.exp(1j * c), np.exp(-1j * c)])
    ed = np.cos(d) * I2 + 1j * np.sin(d) * P
    return eb @ ec @ ed


def chain_matrices(sigma: str, theta: ParamSchedule, n_axis) -> list:
    """The ``2p+1`` transfer matrices linking consecutive storage positions."""
    E = [_layer(theta, j, n_axis) for j in range(theta.p)]
    return E + [PAULI[sigma]] + [e.conj().T for e in E[::-1]]


def _ket(m):
    from .simulator import bloch_state

    return bloch_state(m)


def f_table_single(sigma: str, m, n_axis, theta: ParamSchedule) -> np.ndarray:
    """``f^sigma_{m,n}(z)`` for every bit path, built by broadcasting the chain."""
    mats = chain_matrices(sigma, theta, n_axis)
    ket = _ket(m)
    L = path_length(theta.p)
    # axis k of t is storage position k
    t = ket.conj()
    for M in mats:
        t = t[..., :, None] * M.reshape((1,) * (t.ndim - 1) + (2, 2))
    t = t * ket
    # C order puts position 0 on the slowest axis; reverse so position k is bit k
    return np.transpose(t, tuple(range(L - 1, -1, -1))).reshape(-1)


def f_value(sigma: str, m, n_axis, theta: ParamSchedule, z) -> complex:
    """One chain product, evaluated directly (no tables)."""
    if theta.p < 1:
        raise ValueError("depth must be at least 1")
    z = np.asarray(z)
    if len(z) != path_length(theta.p):
        raise ValueError("bit path has the wrong length")
    b = (1 - z) // 2
    mats = chain_matrices(sigma, theta, n_axis)
    ket = _ket(m)
    val = np.conj(ket[b[0]])
    for k, M in enumerate(mats, start=1):
        val *= M[b[k - 1], b[k]]
    return complex(val * ket[b[-1]])


def fbar_table(sigma: str, theta: ParamSchedule, dist: Distribution | None = None) -> np.ndarray:
    """Distribution average of ``f^sigma`` over the support of ``dist``."""
    if theta.p > MAX_P + 4:
        raise ValueError(f"p={theta.p} too large for table construction")
    dist = signed_x() if dist is None else dist
    out = np.zeros(1 << path_length(theta.p), dtype=complex)
    for m, n, w in zip(dist.m, dist.n, dist.weights):
        out += w * f_table_single(sigma, m, n, theta)
    return out


# --- the tree iteration --------------------------------------------------------------------


def apply_kernel(v: np.ndarray, avec: np.ndarray, sign: int = PHASE_SIGN) -> np.ndarray:
    """``(K v)(z) = sum_x exp(i sign A.(x z)) v(x)`` via one 2x2 transform per position."""
    L = len(avec)
    batch = v.shape[:-1]
    out = np.asarray(v, dtype=complex)
    for k, a in enumerate(avec):
        e = np.exp(1j * sign * a)
        M = np.array([[e, np.conj(e)], [np.conj(e), e]])
        view = out.reshape(batch + (1 << (L - 1 - k), 2, 1 << k))
        out = np.einsum("ab,...ibj->...iaj", M, view).reshape(out.shape)
    return out


def kernel_matrix(avec: np.ndarray, sign: int = PHASE_SIGN) -> np.ndarray:
    """Dense kernel, only for small ``p`` and tests."""
    p = (len(avec) - 2) // 2
    z = z_table(p)
    return np.exp(1j * sign * ((z[:, None, :] * z[None, :, :]) @ avec))


def h_tables(theta: ParamSchedule, d: int, fbar_I: np.ndarray | None = None,
             dist: Distribution | None = None, sign: int = PHASE_SIGN, max_p: int = MAX_P) -> list:
    """``[H^(0), ..., H^(p)]``; the constraint on the middle pair is carried by ``fbar_I``."""
    if d < 1 or d > MAX_D:
        raise ValueError(f"degree parameter d={d} must lie in [1, {MAX_D}]")
    if theta.p > max_p:
        raise ValueError(f"p={theta.p} exceeds configured limit {max_p}")
    if fbar_I is None:
        fbar_I = fbar_table("I", theta, dist)
    avec = phase_vector(theta)
    H = [np.ones_like(fbar_I)]
    for _ in range(theta.p):
        H.append(apply_kernel(H[-1] * fbar_I, avec, sign) ** d)
    return H


def h_iterate(fbar_I: np.ndarray, theta: ParamSchedule, d: int, sign: int = PHASE_SIGN) -> np.ndarray:
    return h_tables(theta, d, fbar_I=fbar_I, sign=sign)[-1]


def h_iterate_dense(fbar_I: np.ndarray, theta: ParamSchedule, d: int, sign: int = PHASE_SIGN) -> np.ndarray:
    """Reference implementation with the explicit constrained double sum."""
    p = theta.p
    z = z_table(p)
    K = kernel_matrix(phase_vector(theta), sign)
    keep = z[:, p] == z[:, p + 1]
    H = np.ones(len(z), dtype=complex)
    for _ in range(p):
        H = (K[:, keep] @ (H[keep] * fbar_I[keep])) ** d
    return H


def edge_expectations(labels, theta: ParamSchedule, d: int, dist: Distribution | None = None,
                      sign: int = PHASE_SIGN) -> dict:
    """``E<sigma_L sigma_R>`` for each two-letter label such as ``"XX"`` or ``"ZI"``."""
    dist = signed_x() if dist is None else dist
    tables = {s: fbar_table(s, theta, dist) for s in set("".join(labels)) | {"I"}}
    Hp = h_tables(theta, d, fbar_I=tables["I"], sign=sign)[-1]
    avec = phase_vector(theta)
    # rounding in the d-th power grows roughly linearly in d
    tol = 1e-9 + 1e-14 * d
    out = {}
    for lab in labels:
        gL = Hp * tables[lab[0]]
        gR = Hp * tables[lab[1]]
        val = np.sum(gL * apply_kernel(gR, avec, sign))
        if abs(val.imag) > tol:
            raise ArithmeticError(f"<{lab}> has imaginary part {val.imag:.3e}")
        out[lab] = float(val.real)
    return out


def edge_expectation(sigma_L: str, sigma_R: str, theta: ParamSchedule, d: int,
                     dist: Distribution | None = None, sign: int = PHASE_SIGN) -> float:
    lab = sigma_L + sigma_R
    return edge_expectations([lab], theta, d, dist, sign)[lab]


QMC_COEFFS = (0.5, -0.5, -0.5, -0.5)
XY_COEFFS = (0.0, 1.0, 1.0, 0.0)
HEISENBERG_COEFFS = (0.0, 1.0, 1.0, 1.0)


def objective_energy(coeffs, theta: ParamSchedule, d: int, dist: Distribution | None = None,
                     sign: int = PHASE_SIGN) -> float:
    """``c_I + c_XX<XX> + c_YY<YY> + c_ZZ<ZZ>`` on one edge."""
    c_I, c_XX, c_YY, c_ZZ = coeffs
    labels = [lab for lab, c in (("XX", c_XX), ("YY", c_YY), ("ZZ", c_ZZ)) if c != 0]
    ev = edge_expectations(labels, theta, d, dist, sign) if labels else {}
    return float(c_I + sum(c * ev.get(lab, 0.0) for lab, c in (("XX", c_XX), ("YY", c_YY), ("ZZ", c_ZZ))))


def _check_assumption_preconditions(theta: ParamSchedule):
    if np.any(np.abs(theta.gamma) > 1e-12):
        raise ValueError("assumption check needs every gamma = 0")
    k = theta.beta / (np.pi / 4)
    if np.any(np.abs(k - np.round(k)) > 1e-9):
        raise ValueError("assumption check needs every beta to be a multiple of pi/4")


def assumption_check(theta: ParamSchedule, d: int, k: int, sign: int = PHASE_SIGN) -> float:
    """``|sum_a fbar^X(a) H^(k)(a)|`` under the signed-x distribution."""
    _check_assumption_preconditions(theta)
    if not 0 <= k <= theta.p:
        raise ValueError(f"level k={k} outside 0..{theta.p}")
    dist = signed_x()
    fI = fbar_table("I", theta, dist)
    fX = fbar_table("X", theta, dist)
    Hk = h_tables(theta, d, fbar_I=fI, sign=sign)[k]
    return float(abs(np.sum(fX * Hk)))
