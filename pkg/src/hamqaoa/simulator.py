"""Exact statevector simulation of the layered four-driver circuit.

One layer applies, in order, ``exp(-i alpha A)``, ``exp(-i beta B)``,
``exp(-i gamma C)`` and ``exp(-i delta D)`` with

    A = sum_{u~v} Z_u Z_v,   B = sum_v X_v,   C = sum_v Z_v,   D = sum_v n_v . sigma_v

starting from the product state of Bloch vectors ``m_v``. In the simplified
ansatz ``n_v = m_v = (s_v, 0, 0)`` for a sign string ``s``.

States are complex arrays whose last axis has length ``2**n`` (little-endian).
Leading axes are treated as a batch, which is how sign-string averages are
computed in one sweep.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .graphs import InteractionGraph
from .hamiltonians import HamiltonianSpec, _index, apply_hamiltonian, energy, preset
from .params import ParamSchedule

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True, eq=False)
class Ansatz:
    """Either ``simplified`` with a sign string, or ``general`` with per-vertex axes."""

    variant: str
    signs: np.ndarray | None = None
    n_vecs: np.ndarray | None = None
    m_vecs: np.ndarray | None = None

    def __post_init__(self):
        if self.variant == "simplified":
            s = np.asarray(self.signs, dtype=int).reshape(-1)
            if not np.all(np.abs(s) == 1):
                raise ValueError("signs must be +1 or -1")
            object.__setattr__(self, "signs", s)
        elif self.variant == "general":
            for name in ("n_vecs", "m_vecs"):
                a = np.asarray(getattr(self, name), dtype=float)
                if a.ndim != 2 or a.shape[1] != 3:
                    raise ValueError(f"{name} must have shape (n, 3)")
                if np.any(np.abs(np.linalg.norm(a, axis=1) - 1) > 1e-12):
                    raise ValueError(f"{name} rows must be unit vectors")
                object.__setattr__(self, name, a)
            if len(self.n_vecs) != len(self.m_vecs):
                raise ValueError("n_vecs and m_vecs must have equal length")
        else:
            raise ValueError(f"unknown ansatz variant {self.variant!r}")

    @classmethod
    def simplified(cls, signs) -> "Ansatz":
        return cls("simplified", signs=signs)

    @classmethod
    def general(cls, n_vecs, m_vecs) -> "Ansatz":
        return cls("general", n_vecs=n_vecs, m_vecs=m_vecs)

    @property
    def n(self) -> int:
        return len(self.signs) if self.variant == "simplified" else len(self.n_vecs)

    def axes(self):
        """Return ``(n_vecs, m_vecs)`` regardless of the variant."""
        if self.variant == "general":
            return self.n_vecs, self.m_vecs
        v = np.zeros((self.n, 3))
        v[:, 0] = self.signs
        return v, v

    def as_general(self) -> "Ansatz":
        return Ansatz.general(*self.axes())

    def to_dict(self) -> dict:
        if self.variant == "simplified":
            return {"variant": "simplified", "signs": self.signs.tolist()}
        return {"variant": "general", "n": self.n_vecs.tolist(), "m": self.m_vecs.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Ansatz":
        if data.get("variant") == "general":
            return cls.general(data["n"], data["m"])
        return cls.simplified(data["signs"])

    @classmethod
    def load(cls, path) -> "Ansatz":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def bloch_state(m) -> np.ndarray:
    """``cos(t/2)|0> + exp(i f) sin(t/2)|1>`` for the unit vector with polar angles (t, f)."""
    x, y, z = m
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.arctan2(y, x)
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def product_state(single: list) -> np.ndarray:
    """Kronecker product with qubit 0 as the least significant factor."""
    psi = np.ones(1, dtype=complex)
    for q in single:
        psi = np.kron(np.asarray(q, dtype=complex), psi)
    return psi


def initial_state(spec: Ansatz, n: int | None = None) -> np.ndarray:
    if n is not None and n != spec.n:
        raise ValueError(f"ansatz is sized for {spec.n} qubits, not {n}")
    if spec.variant == "simplified":
        r = 1 / np.sqrt(2)
        return product_state([[r, r * s] for s in spec.signs])
    return product_state([bloch_state(m) for m in spec.m_vecs])


def rotation(axis, angle: float) -> np.ndarray:
    """``exp(-i angle axis.sigma)`` for a unit 3-vector ``axis``."""
    nx_, ny, nz = axis
    P = nx_ * X + ny * Y + nz * Z
    return np.cos(angle) * I2 - 1j * np.sin(angle) * P


def apply_1q(psi: np.ndarray, n: int, v: int, U: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix (or a batch of them, shape ``(..., 2, 2)``) to qubit ``v``."""
    batch = psi.shape[:-1]
    view = psi.reshape(batch + (1 << (n - 1 - v), 2, 1 << v))
    U = np.asarray(U)
    if U.ndim == 2:
        out = np.einsum("ab,...ibj->...iaj", U, view)
    else:
        out = np.einsum("...ab,...ibj->...iaj", U, view)
    return out.reshape(psi.shape)


def _nqubits(psi) -> int:
    dim = psi.shape[-1]
    n = dim.bit_length() - 1
    if dim != 1 << n:
        raise ValueError(f"state dimension {dim} is not a power of two")
    return n


def zz_sum(g: InteractionGraph, weights=None) -> np.ndarray:
    """Eigenvalue of ``sum_{u~v} w_uv Z_u Z_v`` on every basis state."""
    idx = _index(g.n_vertices)
    out = np.zeros(1 << g.n_vertices)
    w = np.ones(g.n_edges) if weights is None else np.asarray(weights, dtype=float)
    for (u, v, _), wt in zip(g.edges, w):
        out += wt * (1.0 - 2.0 * (((idx >> u) ^ (idx >> v)) & 1))
    return out


def z_sum(n: int) -> np.ndarray:
    """Eigenvalue of ``sum_v Z_v`` on every basis state."""
    return n - 2.0 * np.bitwise_count(_index(n))


def apply_A(psi, g: InteractionGraph, angle: float, weights=None, zz=None):
    psi = np.asarray(psi)
    if psi.shape[-1] != 1 << g.n_vertices:
        raise ValueError("state dimension does not match the graph")
    if zz is None:
        zz = zz_sum(g, weights)
    return np.exp(-1j * angle * zz) * psi


def apply_B(psi, angle: float):
    psi = np.asarray(psi, dtype=complex)
    n = _nqubits(psi)
    U = rotation((1, 0, 0), angle)
    for v in range(n):
        psi = apply_1q(psi, n, v, U)
    return psi


def apply_C(psi, angle: float, zs=None):
    psi = np.asarray(psi, dtype=complex)
    n = _nqubits(psi)
    if zs is None:
        zs = z_sum(n)
    return np.exp(-1j * angle * zs) * psi


def _apply_x_signed(psi, n, angle, signs):
    """``prod_v exp(-i angle s_v X_v)``; ``signs`` may carry batch axes matching ``psi``."""
    c, s = np.cos(angle), np.sin(angle)
    signs = np.asarray(signs)
    batch = psi.shape[:-1]
    for v in range(n):
        view = psi.reshape(batch + (1 << (n - 1 - v), 2, 1 << v))
        sv = signs[..., v].reshape(signs.shape[:-1] + (1, 1, 1))
        psi = (c * view - 1j * s * sv * view[..., ::-1, :]).reshape(psi.shape)
    return psi


def apply_D(psi, spec: Ansatz, angle: float):
    psi = np.asarray(psi, dtype=complex)
    n = _nqubits(psi)
    if spec.n != n:
        raise ValueError("ansatz size does not match the state")
    if spec.variant == "simplified":
        return _apply_x_signed(psi, n, angle, spec.signs)
    for v, axis in enumerate(spec.n_vecs):
        psi = apply_1q(psi, n, v, rotation(axis, angle))
    return psi


def prepare_hqs(g: InteractionGraph, spec: Ansatz, theta: ParamSchedule) -> np.ndarray:
    """Prepare the layered state for schedule ``theta``."""
    n = g.n_vertices
    if spec.n != n:
        raise ValueError(f"ansatz has {spec.n} qubits, graph has {n}")
    zz, zs = zz_sum(g), z_sum(n)
    psi = initial_state(spec)
    for a, b, c, d in theta.rows():
        psi = apply_A(psi, g, a, zz=zz)
        psi = apply_B(psi, b)
        psi = apply_C(psi, c, zs=zs)
        psi = apply_D(psi, spec, d)
    return psi


def _fused_layer(b: float, c: float, d: float, sign: int) -> np.ndarray:
    """Single-qubit part of one layer, ``exp(-i d s X) exp(-i c Z) exp(-i b X)``."""
    return rotation((sign, 0, 0), d) @ rotation((0, 0, 1), c) @ rotation((1, 0, 0), b)


def prepare_hqs_batch(g: InteractionGraph, signs: np.ndarray, theta: ParamSchedule) -> np.ndarray:
    """Simplified-ansatz states for a batch of sign strings, shape ``(S, 2**n)``.

    The B, C and D factors of a layer act qubit-wise, so they are fused into one
    2x2 matrix per qubit (two variants, one per sign).
    """
    signs = np.atleast_2d(np.asarray(signs))
    n = g.n_vertices
    if signs.shape[1] != n:
        raise ValueError("sign strings do not match the graph")
    S = len(signs)
    zz = zz_sum(g)
    # product of (|0> + s|1>)/sqrt2: amplitude on basis j is prod_v s_v^{bit_v(j)} / 2^{n/2}
    bits = (_index(n)[None, :] >> np.arange(n)[:, None]) & 1
    parity = ((signs < 0).astype(np.int64) @ bits) & 1
    psi = (1.0 - 2.0 * parity).astype(complex) / np.sqrt(1 << n)
    plus = signs > 0
    for a, b, c, d in theta.rows():
        psi *= np.exp(-1j * a * zz)
        Up, Um = _fused_layer(b, c, d, 1), _fused_layer(b, c, d, -1)
        for v in range(n):
            coef = np.where(plus[:, v, None, None], Up, Um).reshape(S, 1, 2, 2, 1)
            view = psi.reshape(S, 1 << (n - 1 - v), 1, 2, 1 << v)
            psi = (coef[:, :, :, 0] * view[:, :, :, 0] + coef[:, :, :, 1] * view[:, :, :, 1]).reshape(S, -1)
    return psi


def fidelity(psi, target) -> float:
    """``|<target|psi>|^2`` for a vector, or the projection weight for a basis (columns)."""
    psi = np.asarray(psi)
    target = np.asarray(target)
    if target.shape[0] != psi.shape[-1]:
        raise ValueError("dimension mismatch")
    if target.ndim == 1:
        return float(abs(np.vdot(target, psi)) ** 2)
    return float(np.sum(np.abs(target.conj().T @ psi) ** 2))


# --- the AGM single-parameter baseline -------------------------------------------------


def agm_pauli(sign: int) -> np.ndarray:
    """Conjugated Z for a vertex with sign ``s``: ``(Z - s Y)/sqrt(2)``."""
    return (Z - sign * Y) / np.sqrt(2)


def agm_state(g: InteractionGraph, s, theta: float) -> np.ndarray:
    """``exp(-i theta sum_{u~v} P_u P_v)|s>`` built from commuting two-qubit gates."""
    s = np.asarray(s, dtype=int)
    n = g.n_vertices
    if len(s) != n:
        raise ValueError("sign string does not match the graph")
    psi = initial_state(Ansatz.simplified(s))
    c, sn = np.cos(theta), np.sin(theta)
    for u, v, _ in g.edges:
        pp = apply_1q(apply_1q(psi, n, u, agm_pauli(s[u])), n, v, agm_pauli(s[v]))
        psi = c * psi - 1j * sn * pp
    return psi


def agm_optimize(g: InteractionGraph, s, spec: HamiltonianSpec | None = None, step: float = 1e-3):
    """Maximize the energy over the single AGM angle by a dense grid plus a bounded polish."""
    if spec is None:
        spec = preset("qmc", g)
    s = np.asarray(s, dtype=int)
    # the AGM state equals the one-layer circuit with (theta, 0, 0, pi/8); reuse the batched path
    grid = np.arange(-np.pi / 2 + step, np.pi / 2 + step / 2, step)

    def e(t):
        return energy(spec, prepare_hqs(g, Ansatz.simplified(s), ParamSchedule([t], [0], [0], [np.pi / 8])))

    vals = _agm_grid_energies(g, s, spec, grid)
    k = int(np.argmax(vals))
    lo, hi = grid[k] - step, grid[k] + step
    res = minimize_scalar(lambda t: -e(t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    best_t, best_e = (res.x, -res.fun) if -res.fun >= vals[k] else (grid[k], vals[k])
    return float(best_t), float(best_e)


def _agm_grid_energies(g, s, spec, grid):
    # exp(-i t A) is diagonal, so the grid sweep is a phase rotation followed by the fixed D layer
    n = g.n_vertices
    zz = zz_sum(g)
    psi0 = initial_state(Ansatz.simplified(s))
    out = np.empty(len(grid))
    chunk = max(1, (1 << 22) >> n)
    for i in range(0, len(grid), chunk):
        t = grid[i:i + chunk]
        psi = np.exp(-1j * t[:, None] * zz[None, :]) * psi0[None, :]
        psi = _apply_x_signed(psi, n, np.pi / 8, s)
        out[i:i + chunk] = energy(spec, psi)
    return out


# --- adjoint gradient ---------------------------------------------------------------------


def energy_and_gradient(g: InteractionGraph, spec_h: HamiltonianSpec, ansatz: Ansatz, theta: ParamSchedule):
    """Energy and its gradient with respect to the flat ``[alpha|beta|gamma|delta]`` vector.

    Uses one forward sweep and one backward sweep: with ``lam = H psi`` carried
    back through the circuit, ``dE/dx = 2 Im <lam| G |phi>`` where ``G`` is the
    generator of the gate and ``phi`` the state just after it.
    """
    n = g.n_vertices
    zz, zs = zz_sum(g), z_sum(n)
    nv, _ = ansatz.axes()
    psi = prepare_hqs(g, ansatz, theta)
    E = energy(spec_h, psi)
    lam = apply_hamiltonian(spec_h, psi)
    phi = psi
    p = theta.p
    grad = np.zeros((4, p))

    def gen_B(x):
        return sum(apply_1q(x, n, v, X) for v in range(n))

    def gen_D(x):
        if ansatz.variant == "simplified":
            out = np.zeros_like(x)
            idx = _index(n)
            for v in range(n):
                out += ansatz.signs[v] * x[idx ^ (1 << v)]
            return out
        return sum(apply_1q(x, n, v, a[0] * X + a[1] * Y + a[2] * Z) for v, a in enumerate(nv))

    rows = theta.rows()
    for j in range(p - 1, -1, -1):
        a, b, c, d = rows[j]
        grad[3, j] = 2 * np.imag(np.vdot(lam, gen_D(phi)))
        phi, lam = apply_D(phi, ansatz, -d), apply_D(lam, ansatz, -d)
        grad[2, j] = 2 * np.imag(np.vdot(lam, zs * phi))
        phi, lam = apply_C(phi, -c, zs), apply_C(lam, -c, zs)
        grad[1, j] = 2 * np.imag(np.vdot(lam, gen_B(phi)))
        phi, lam = apply_B(phi, -b), apply_B(lam, -b)
        grad[0, j] = 2 * np.imag(np.vdot(lam, zz * phi))
        phi, lam = apply_A(phi, g, -a, zz=zz), apply_A(lam, g, -a, zz=zz)
    return E, grad.reshape(-1)


# --- averages over sign strings ---------------------------------------------------------


def edge_automorphisms(g: InteractionGraph, edge) -> np.ndarray:
    """Vertex permutations of ``g`` mapping the edge ``{u, v}`` onto itself (rows are images)."""
    from networkx.algorithms.isomorphism import GraphMatcher

    G = g.to_networkx()
    u, v = edge
    perms = []
    for m in GraphMatcher(G, G).isomorphisms_iter():
        if {m[u], m[v]} == {u, v}:
            perms.append([m[k] for k in range(g.n_vertices)])
    return np.array(perms, dtype=int)


def sign_orbits(g: InteractionGraph, edge, use_symmetry: bool = True):
    """Representative sign strings and orbit weights under the edge stabilizer.

    Averaging an edge quantity over the representatives with these weights
    equals the uniform average over all ``2**n`` sign strings, because the
    circuit commutes with graph automorphisms that fix the edge.
    """
    n = g.n_vertices
    codes = np.arange(1 << n, dtype=np.int64)
    if use_symmetry:
        perms = edge_automorphisms(g, edge)
        bits = (codes[:, None] >> np.arange(n)[None, :]) & 1
        canon = codes.copy()
        for perm in perms:
            # the sign on vertex k moves to vertex perm[k]
            moved = np.zeros_like(codes)
            for k in range(n):
                moved |= bits[:, k] << perm[k]
            canon = np.minimum(canon, moved)
        reps, counts = np.unique(canon, return_counts=True)
    else:
        reps, counts = codes, np.ones(len(codes), dtype=np.int64)
    signs = 1 - 2 * ((reps[:, None] >> np.arange(n)[None, :]) & 1)
    return signs, counts / counts.sum()


def edge_pauli_batch(psi: np.ndarray, n: int, u: int, v: int) -> dict:
    """``<XX>``, ``<YY>``, ``<ZZ>`` on edge ``(u, v)`` for a batch of states."""
    idx = _index(n)
    zz = 1.0 - 2.0 * (((idx >> u) ^ (idx >> v)) & 1)
    amp = psi.conj() * psi[..., idx ^ ((1 << u) | (1 << v))]
    return {
        "XX": np.real(amp.sum(-1)),
        "YY": -np.real(amp @ zz),
        "ZZ": (np.abs(psi) ** 2) @ zz,
    }


def sign_average_edge(g: InteractionGraph, theta: ParamSchedule, edge=None, chunk: int = 256,
                      use_symmetry: bool = True) -> dict:
    """Uniform average over every sign string of the edge Pauli correlators."""
    u, v = g.edges[0][:2] if edge is None else edge
    signs, w = sign_orbits(g, (u, v), use_symmetry)
    out = {"XX": 0.0, "YY": 0.0, "ZZ": 0.0}
    for i in range(0, len(signs), chunk):
        psi = prepare_hqs_batch(g, signs[i:i + chunk], theta)
        vals = edge_pauli_batch(psi, g.n_vertices, u, v)
        for k in out:
            out[k] += float(vals[k] @ w[i:i + chunk])
    return out
