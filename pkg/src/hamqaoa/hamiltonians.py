"""2-local Hamiltonians on interaction graphs, energies and exact diagonalization.

Qubit ordering is little-endian throughout: qubit ``v`` is bit ``v`` of the
basis-state index, and bit value 0 is the ``Z = +1`` state.

Every supported term (I, XX, YY, ZZ, Z) is a real matrix in the computational
basis, so the full operator is real symmetric. This lets the eigensolvers
work in real arithmetic.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.sparse.linalg import LinearOperator, lobpcg

from .graphs import InteractionGraph

DENSE_LIMIT = 12
ITERATIVE_LIMIT = 24
DEGENERACY_TOL = 1e-8
BETHE_RING_DENSITY = -2.0 * np.log(2.0)

PRESETS = ("qmc", "heisenberg_pauli", "xy", "xxz")


@lru_cache(maxsize=8)
def _index(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


def z_values(n: int, v: int) -> np.ndarray:
    """Eigenvalue of ``Z_v`` on every basis state, as +-1 floats."""
    return 1.0 - 2.0 * ((_index(n) >> v) & 1)


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Weighted sum of per-edge ``c_I + c_XX XX + c_YY YY + c_ZZ ZZ`` and per-vertex ``c_Z Z``.

    Coefficients already include the edge weights.
    """

    graph: InteractionGraph
    c_I: np.ndarray
    c_XX: np.ndarray
    c_YY: np.ndarray
    c_ZZ: np.ndarray
    c_Z: np.ndarray
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        m, n = self.graph.n_edges, self.graph.n_vertices
        for name, size in (("c_I", m), ("c_XX", m), ("c_YY", m), ("c_ZZ", m), ("c_Z", n)):
            a = np.array(getattr(self, name), dtype=float).reshape(-1)
            if a.size == 1 and size != 1:
                a = np.full(size, a[0])
            if a.shape != (size,):
                raise ValueError(f"{name} has length {a.size}, expected {size}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} has non-finite entries")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "_diag", None)

    @property
    def n_qubits(self) -> int:
        return self.graph.n_vertices

    def diagonal(self) -> np.ndarray:
        """Diagonal part (I, ZZ and Z terms) as a cached vector over basis states."""
        if self._diag is None:
            n = self.n_qubits
            idx = _index(n)
            d = np.full(1 << n, float(np.sum(self.c_I)))
            for (u, v, _), czz in zip(self.graph.edges, self.c_ZZ):
                if czz:
                    d += czz * (1.0 - 2.0 * (((idx >> u) ^ (idx >> v)) & 1))
            for v, cz in enumerate(self.c_Z):
                if cz:
                    d += cz * z_values(n, v)
            d.setflags(write=False)
            object.__setattr__(self, "_diag", d)
        return self._diag

    def offdiag_terms(self):
        """Yield ``(mask, coeff_vector)`` with ``(H psi)[j] += coeff[j] psi[j ^ mask]``."""
        n = self.n_qubits
        idx = _index(n)
        for (u, v, _), cxx, cyy in zip(self.graph.edges, self.c_XX, self.c_YY):
            if cxx == 0 and cyy == 0:
                continue
            zz = 1.0 - 2.0 * (((idx >> u) ^ (idx >> v)) & 1)
            # Y_u Y_v psi[j] = -z_u z_v psi[j ^ mask]
            yield (1 << u) | (1 << v), cxx - cyy * zz

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "graph": self.graph.to_dict()}
        if self.kind == "xxz":
            out.update(delta=self.params["delta"], h=self.params["h"])
        if self.kind == "custom":
            for name in ("c_I", "c_XX", "c_YY", "c_ZZ", "c_Z"):
                out[name] = getattr(self, name).tolist()
        return out


def preset(kind: str, g: InteractionGraph, delta: float | None = None, h: float | None = None) -> HamiltonianSpec:
    """Named Hamiltonians: ``qmc``, ``heisenberg_pauli``, ``xy`` and ``xxz``."""
    if kind == "xxz":
        if delta is None or h is None:
            raise ValueError("xxz needs both delta and h")
    elif delta is not None or h is not None:
        raise ValueError(f"{kind} takes no delta/h parameters")
    _, _, w = g.edge_array()
    zeros_v = np.zeros(g.n_vertices)
    if kind == "qmc":
        return HamiltonianSpec(g, 0.5 * w, -0.5 * w, -0.5 * w, -0.5 * w, zeros_v, kind)
    if kind == "heisenberg_pauli":
        return HamiltonianSpec(g, 0 * w, w, w, w, zeros_v, kind)
    if kind == "xy":
        return HamiltonianSpec(g, 0 * w, w, w, 0 * w, zeros_v, kind)
    if kind == "xxz":
        return HamiltonianSpec(
            g, 0 * w, w, w, float(delta) * w, np.full(g.n_vertices, float(h)), kind,
            {"delta": float(delta), "h": float(h)},
        )
    raise ValueError(f"unknown Hamiltonian kind {kind!r}")


def spec_from_dict(data: dict) -> HamiltonianSpec:
    g = InteractionGraph.from_dict(data["graph"])
    kind = data.get("kind", "qmc")
    if kind == "custom":
        return HamiltonianSpec(g, *(data.get(k, 0.0) for k in ("c_I", "c_XX", "c_YY", "c_ZZ", "c_Z")))
    return preset(kind, g, data.get("delta"), data.get("h"))


def spec_load(path) -> HamiltonianSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))


def _check_state(spec: HamiltonianSpec, psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi)
    if psi.shape[-1] != 1 << spec.n_qubits:
        raise ValueError(f"state dimension {psi.shape[-1]} does not match {spec.n_qubits} qubits")
    return psi


def apply_hamiltonian(spec: HamiltonianSpec, psi: np.ndarray) -> np.ndarray:
    """Matrix-free ``H @ psi``. Leading axes of ``psi`` are treated as a batch."""
    psi = _check_state(spec, psi)
    idx = _index(spec.n_qubits)
    out = spec.diagonal() * psi
    for mask, coeff in spec.offdiag_terms():
        out += coeff * psi[..., idx ^ mask]
    return out


def energy(spec: HamiltonianSpec, psi: np.ndarray):
    """Expectation value ``<psi|H|psi>`` streamed term by term.

    Works on a batch of states along the leading axes.
    """
    psi = _check_state(spec, psi)
    idx = _index(spec.n_qubits)
    prob = (psi * psi.conj()).real if np.iscomplexobj(psi) else psi * psi
    total = prob @ spec.diagonal()
    for mask, coeff in spec.offdiag_terms():
        amp = psi.conj() * psi[..., idx ^ mask]
        val = amp @ coeff
        if np.any(np.abs(np.imag(val)) > 1e-10 * max(1.0, float(np.max(np.abs(val))))):
            raise ArithmeticError("energy picked up an imaginary part; state or spec is malformed")
        total = total + np.real(val)
    return float(total) if np.ndim(total) == 0 else total


def energy_density(spec: HamiltonianSpec, psi: np.ndarray):
    return energy(spec, psi) / spec.n_qubits


def pauli_expectation(psi: np.ndarray, n: int, u: int, v: int, label: str) -> float:
    """``<psi| P_u P_v |psi>`` for ``label`` in XX, YY, ZZ."""
    idx = _index(n)
    zz = 1.0 - 2.0 * (((idx >> u) ^ (idx >> v)) & 1)
    if label == "ZZ":
        return float(np.real(np.vdot(psi, zz * psi)))
    partner = psi[idx ^ ((1 << u) | (1 << v))]
    if label == "XX":
        return float(np.real(np.vdot(psi, partner)))
    if label == "YY":
        return float(np.real(np.vdot(psi, -zz * partner)))
    raise ValueError(f"unsupported Pauli label {label!r}")


def dense_matrix(spec: HamiltonianSpec) -> np.ndarray:
    n = spec.n_qubits
    if n > DENSE_LIMIT:
        raise ValueError(f"dense matrix for n={n} exceeds limit {DENSE_LIMIT}")
    dim = 1 << n
    idx = _index(n)
    H = np.diag(np.array(spec.diagonal()))
    for mask, coeff in spec.offdiag_terms():
        H[idx, idx ^ mask] += coeff
    return H


def _iterative_eigenspace(spec, which, k, tol, maxiter):
    """Block (LOBPCG) solve with a block that grows until it outlasts the extremal level.

    Single-vector Lanczos can miss members of a degenerate level, so a block
    method is used. The block doubles whenever every Ritz value but one falls
    inside the extremal group.
    """
    dim = 1 << spec.n_qubits

    def mm(X):
        return apply_hamiltonian(spec, np.asarray(X).T).T

    op = LinearOperator((dim, dim), matvec=mm, matmat=mm, dtype=float)
    rng = np.random.default_rng(0)
    m = max(k, 2) + 2
    while True:
        X = rng.standard_normal((dim, m))
        with warnings.catch_warnings():
            # accuracy shortfalls are caught by the residual check in the caller
            warnings.simplefilter("ignore", UserWarning)
            _, vecs = lobpcg(op, X, largest=(which == "max"), tol=1e-12, maxiter=maxiter or 2000)
        # Rayleigh-Ritz on the returned block tightens both values and vectors
        Q, _ = np.linalg.qr(vecs)
        vals, W = np.linalg.eigh(Q.T @ mm(Q))
        vecs = Q @ W
        lam = vals[-1] if which == "max" else vals[0]
        keep = np.abs(vals - lam) <= tol
        if keep.sum() < m - 1 or 2 * m > dim // 2:
            return float(lam), vecs[:, keep]
        m *= 2


def extremal_eigenspace(spec: HamiltonianSpec, which: str = "max", method: str = "auto",
                        k: int = 6, tol: float = DEGENERACY_TOL, maxiter: int | None = None):
    """Extremal eigenvalue and an orthonormal basis (columns) of its eigenspace.

    Eigenvalues within ``tol`` of the extremal one are grouped together.
    """
    if which not in ("min", "max"):
        raise ValueError("which must be 'min' or 'max'")
    n = spec.n_qubits
    dim = 1 << n
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "iterative"
    if method == "dense":
        if n > DENSE_LIMIT:
            raise ValueError(f"n={n} exceeds dense limit {DENSE_LIMIT}")
        vals, vecs = np.linalg.eigh(dense_matrix(spec))
        if which == "max":
            lam = vals[-1]
            keep = vals >= lam - tol
        else:
            lam = vals[0]
            keep = vals <= lam + tol
        basis = vecs[:, keep]
    elif method == "iterative":
        if n > ITERATIVE_LIMIT:
            raise ValueError(f"n={n} exceeds iterative limit {ITERATIVE_LIMIT}")
        if dim <= 2 * k + 2:
            return extremal_eigenspace(spec, which, "dense", k, tol)
        lam, basis = _iterative_eigenspace(spec, which, k, tol, maxiter)
    else:
        raise ValueError(f"unknown method {method!r}")
    resid = apply_hamiltonian(spec, basis.T) - lam * basis.T
    if np.max(np.linalg.norm(resid, axis=-1)) > 1e-8 * max(1.0, abs(lam)):
        raise ArithmeticError("eigensolver did not converge to the requested residual")
    return float(lam), basis


def extremal_eigenpair(spec: HamiltonianSpec, which: str = "max", method: str = "auto"):
    """Extremal eigenvalue and one unit-norm eigenvector."""
    lam, basis = extremal_eigenspace(spec, which, method)
    psi = basis[:, 0].astype(complex)
    return lam, psi / np.linalg.norm(psi)


def eigenspace_fidelity(basis: np.ndarray, psi: np.ndarray) -> float:
    """Squared norm of the projection of ``psi`` onto the span of ``basis`` columns."""
    amps = basis.conj().T @ psi
    return float(np.sum(np.abs(amps) ** 2))
