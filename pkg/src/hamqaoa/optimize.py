"""Parameter search: local minimization, restart strategies and gauge fixing.

Every objective here is minimized. Maximizing an energy is expressed by
negating it (``maximize=True`` on the objective classes).
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import formula_finite as ff
from . import formula_infinite as fi
from .graphs import InteractionGraph
from .hamiltonians import HamiltonianSpec, energy
from .params import ParamSchedule, wrap_angle
from .simulator import Ansatz, energy_and_gradient, prepare_hqs, sign_average_edge

HALF_PI = np.pi / 2


# --- objectives ----------------------------------------------------------------------------


class Objective:
    """Deterministic map from a flat ``[alpha|beta|gamma|delta]`` vector to a real value."""

    p: int = 1
    has_gradient = False

    def __call__(self, x) -> float:
        raise NotImplementedError

    def value_and_grad(self, x):
        raise NotImplementedError

    def with_depth(self, p: int) -> "Objective":
        raise NotImplementedError

    def schedule_value(self, theta: ParamSchedule) -> float:
        return self(theta.to_vector())


class StatevectorObjective(Objective):
    """Energy of the prepared state; ``maximize`` negates it."""

    has_gradient = True

    def __init__(self, graph: InteractionGraph, spec: HamiltonianSpec, ansatz: Ansatz, p: int,
                 maximize: bool = True):
        self.graph, self.spec, self.ansatz, self.p = graph, spec, ansatz, p
        self.maximize = maximize
        self._s = -1.0 if maximize else 1.0

    def __call__(self, x) -> float:
        psi = prepare_hqs(self.graph, self.ansatz, ParamSchedule.from_vector(x))
        return self._s * energy(self.spec, psi)

    def value_and_grad(self, x):
        E, g = energy_and_gradient(self.graph, self.spec, self.ansatz, ParamSchedule.from_vector(x))
        return self._s * E, self._s * g

    def with_depth(self, p: int) -> "StatevectorObjective":
        return StatevectorObjective(self.graph, self.spec, self.ansatz, p, self.maximize)


class SignAveragedObjective(Objective):
    """Per-edge energy averaged over every edge and every sign string.

    This is the quantity the tree formula predicts on graphs whose depth-p
    neighbourhoods are trees, so it is the natural check on formula optima.
    """

    def __init__(self, graph: InteractionGraph, coeffs, p: int, maximize: bool = True):
        self.graph, self.coeffs, self.p = graph, tuple(coeffs), p
        self.maximize = maximize
        self._s = -1.0 if maximize else 1.0

    def __call__(self, x) -> float:
        theta = ParamSchedule.from_vector(x)
        c = self.coeffs
        total = 0.0
        for u, v, _ in self.graph.edges:
            ev = sign_average_edge(self.graph, theta, (u, v))
            total += c[0] + c[1] * ev["XX"] + c[2] * ev["YY"] + c[3] * ev["ZZ"]
        return self._s * total / self.graph.n_edges

    def with_depth(self, p: int) -> "SignAveragedObjective":
        return SignAveragedObjective(self.graph, self.coeffs, p, self.maximize)


class FiniteFormulaObjective(Objective):
    """Per-edge energy from the finite-degree tree iteration."""

    def __init__(self, coeffs, d: int, p: int, dist: ff.Distribution | None = None, maximize: bool = True):
        self.coeffs, self.d, self.p = tuple(coeffs), int(d), p
        self.dist = ff.signed_x() if dist is None else dist
        self.maximize = maximize
        self._s = -1.0 if maximize else 1.0

    def __call__(self, x) -> float:
        return self._s * ff.objective_energy(self.coeffs, ParamSchedule.from_vector(x), self.d, self.dist)

    def with_depth(self, p: int) -> "FiniteFormulaObjective":
        return FiniteFormulaObjective(self.coeffs, self.d, p, self.dist, self.maximize)


class InfiniteFormulaObjective(Objective):
    """``-(nu_YY + nu_ZZ)`` over ``[alpha_tilde | delta]`` at a fixed beta pattern."""

    def __init__(self, beta_quarters, dist: ff.Distribution | None = None):
        self.beta_quarters = tuple(int(b) for b in beta_quarters)
        self.p = len(self.beta_quarters)
        self.dist = ff.signed_x() if dist is None else dist

    def params(self, x) -> fi.RescaledParams:
        x = np.asarray(x, dtype=float)
        return fi.RescaledParams.from_quarters(x[:self.p], self.beta_quarters, x[self.p:])

    def __call__(self, x) -> float:
        return -fi.heisenberg_objective(self.params(x), self.dist)


# --- local minimization --------------------------------------------------------------------


@dataclass
class LocalResult:
    x: np.ndarray
    value: float
    nfev: int
    converged: bool


def minimize_local(obj: Objective, init, method: str = "auto", maxfev: int | None = None,
                   xatol: float = 1e-8, gtol: float = 1e-10, wrap: bool = True) -> LocalResult:
    """Local descent from ``init`` that never returns a value above ``obj(init)``.

    ``nelder-mead`` evaluates the objective at angles wrapped modulo pi so the
    simplex can move freely across the periodic box. ``bfgs`` uses the
    objective's analytic gradient when it has one and finite differences
    otherwise. ``auto`` picks ``bfgs`` for gradient-capable objectives.
    """
    x0 = init.to_vector() if isinstance(init, ParamSchedule) else np.asarray(init, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial parameters must be finite")
    f0 = float(obj(x0))
    if method == "auto":
        method = "bfgs" if obj.has_gradient else "nelder-mead"
    counter = [1]

    def f(x):
        counter[0] += 1
        return obj(wrap_angle(x) if wrap else x)

    if method == "nelder-mead":
        maxfev = maxfev or 400 * len(x0)
        res = minimize(f, x0, method="Nelder-Mead",
                       options={"xatol": xatol, "fatol": 1e-13, "maxfev": maxfev, "adaptive": True})
        converged = bool(res.success)
    elif method == "bfgs":
        if obj.has_gradient:
            def fg(x):
                counter[0] += 1
                return obj.value_and_grad(x)
            res = minimize(fg, x0, jac=True, method="BFGS",
                           options={"gtol": gtol, "maxiter": maxfev or 20000})
        else:
            res = minimize(f, x0, method="BFGS", options={"gtol": 1e-9, "maxiter": maxfev or 2000})
        # BFGS reports precision loss at a converged optimum; treat it as converged
        converged = bool(res.success) or "precision" in str(res.message)
    else:
        raise ValueError(f"unknown local method {method!r}")
    x = wrap_angle(res.x) if wrap else res.x
    val = float(obj(x))
    if val > f0:
        return LocalResult(x0, f0, counter[0], converged)
    return LocalResult(x, val, counter[0], converged)


# --- strategies ----------------------------------------------------------------------------


@dataclass
class StrategyReport:
    strategy: str
    seed: int | None
    levels: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def best(self) -> dict:
        return self.levels[-1]

    @property
    def best_schedule(self) -> ParamSchedule:
        return ParamSchedule.from_vector(self.best["x"])

    def values(self) -> list:
        return [lvl["value"] for lvl in self.levels]

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "wall_time": self.wall_time,
            "levels": [
                {**{k: v for k, v in lvl.items() if k != "x"},
                 "params": ParamSchedule.from_vector(lvl["x"]).to_dict()}
                for lvl in self.levels
            ],
        }


def _restart_job(args):
    obj, x0, method, maxfev = args
    r = minimize_local(obj, x0, method=method, maxfev=maxfev)
    return r.x, r.value, r.nfev


def random_inits(p: int, restarts: int, seed: int, n_params: int | None = None) -> list:
    """One uniform draw from ``[-pi/2, pi/2)`` per restart, each from its own spawned stream."""
    k = 4 * p if n_params is None else n_params
    streams = np.random.SeedSequence(seed).spawn(restarts)
    return [np.random.default_rng(s).uniform(-HALF_PI, HALF_PI, k) for s in streams]


def _best_of(obj: Objective, inits, method, maxfev, workers):
    jobs = [(obj, x0, method, maxfev) for x0 in inits]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_restart_job, jobs))
    else:
        results = [_restart_job(j) for j in jobs]
    # lowest index wins ties so the outcome does not depend on scheduling
    k = min(range(len(results)), key=lambda i: (results[i][1], i))
    return results[k], sum(r[2] for r in results), results


def strategy_random(obj: Objective, p: int | None = None, restarts: int = 10, seed: int = 0,
                    method: str = "auto", maxfev: int | None = None, workers: int = 1,
                    stop_below: float | None = None) -> StrategyReport:
    """Best local optimum over uniformly random initial points."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    t0 = time.perf_counter()
    obj = obj if p is None or p == obj.p else obj.with_depth(p)
    inits = random_inits(obj.p, restarts, seed)
    if stop_below is not None and workers <= 1:
        # sequential early exit once the target is reached; the remaining streams are unused
        best, nfev, used = None, 0, 0
        for x0 in inits:
            x, v, n = _restart_job((obj, x0, method, maxfev))
            nfev += n
            used += 1
            if best is None or v < best[1]:
                best = (x, v)
            if v <= stop_below:
                break
        rep = StrategyReport("random", seed)
        rep.levels.append({"p": obj.p, "x": best[0], "value": best[1], "restarts": used, "nfev": nfev})
    else:
        (x, v, _), nfev, _ = _best_of(obj, inits, method, maxfev, workers)
        rep = StrategyReport("random", seed)
        rep.levels.append({"p": obj.p, "x": x, "value": v, "restarts": restarts, "nfev": nfev})
    rep.wall_time = time.perf_counter() - t0
    return rep


def strategy_gi(obj: Objective, p_max: int, samples_level1: int = 10, insert: str = "end",
                seed: int = 0, method: str = "nelder-mead", maxfev: int | None = None,
                workers: int = 1) -> StrategyReport:
    """Greedy depth growth: best depth-p optimum padded with an identity layer seeds depth p+1.

    The padded point is a stationary point of the deeper objective (every
    derivative along the new layer vanishes there), so gradient methods stay
    put. The default simplex method steps off it.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    t0 = time.perf_counter()
    first = strategy_random(obj.with_depth(1), restarts=samples_level1, seed=seed, method=method,
                            maxfev=maxfev, workers=workers)
    rep = StrategyReport("gi", seed)
    rep.levels.append(first.levels[0])
    for p in range(2, p_max + 1):
        prev = ParamSchedule.from_vector(rep.levels[-1]["x"])
        positions = [p - 1] if insert == "end" else list(range(p))
        if insert not in ("end", "all"):
            raise ValueError("insert must be 'end' or 'all'")
        inits = [prev.insert_zero_layer(k).to_vector() for k in positions]
        (x, v, _), nfev, _ = _best_of(obj.with_depth(p), inits, method, maxfev, workers)
        if v > rep.levels[-1]["value"]:
            raise AssertionError("greedy level got worse; local search contract violated")
        rep.levels.append({"p": p, "x": x, "value": v, "restarts": len(inits), "nfev": nfev})
    vals = rep.values()
    assert all(b <= a for a, b in zip(vals, vals[1:])), "GI values must be non-increasing"
    rep.wall_time = time.perf_counter() - t0
    return rep


def formula_degree(g: InteractionGraph) -> int:
    """``d = round(average degree) - 1``; requires average degree of at least 2."""
    avg = 2 * g.n_edges / g.n_vertices
    if avg < 2:
        raise ValueError(f"average degree {avg:.3g} < 2; the tree iteration needs d >= 1")
    return int(round(avg)) - 1


def edge_coefficients(spec: HamiltonianSpec):
    """Per-edge ``(c_I, c_XX, c_YY, c_ZZ)`` shared by all edges (weights divided out)."""
    if np.any(spec.c_Z != 0):
        raise ValueError("single-site field terms are outside the tree formula")
    _, _, w = spec.graph.edge_array()
    rows = np.stack([spec.c_I / w, spec.c_XX / w, spec.c_YY / w, spec.c_ZZ / w], axis=1)
    if not np.allclose(rows, rows[0], atol=1e-12):
        raise ValueError("edge terms differ between edges; no single formula objective applies")
    return tuple(float(c) for c in rows[0])


def strategy_ifp(g: InteractionGraph, spec: HamiltonianSpec, ansatz: Ansatz, p: int,
                 dist: ff.Distribution | None = None, formula_restarts: int = 10, seed: int = 0,
                 maximize: bool = True, method: str = "auto", maxfev: int | None = None,
                 workers: int = 1, formula_method: str = "nelder-mead") -> StrategyReport:
    """Optimize the tree formula at the graph's degree, then polish on the actual graph."""
    t0 = time.perf_counter()
    d = formula_degree(g)
    fobj = FiniteFormulaObjective(edge_coefficients(spec), d, p, dist, maximize)
    frep = strategy_random(fobj, restarts=formula_restarts, seed=seed, method=formula_method,
                           workers=workers)
    sobj = StatevectorObjective(g, spec, ansatz, p, maximize)
    seed_x = frep.best["x"]
    r = minimize_local(sobj, seed_x, method=method, maxfev=maxfev)
    rep = StrategyReport("ifp", seed)
    rep.levels.append({"p": p, "x": r.x, "value": r.value, "restarts": 1,
                       "nfev": r.nfev + frep.best["nfev"], "formula_value": frep.best["value"],
                       "formula_d": d, "seed_value": float(sobj(seed_x))})
    rep.wall_time = time.perf_counter() - t0
    return rep


# --- large-degree optimum ------------------------------------------------------------------


def beta_patterns(p: int):
    """Beta patterns in units of pi/4 that cover the restricted landscape.

    With every gamma zero, shifting a single beta by pi/2 inserts a global X
    flip that commutes to the end of the circuit, so each beta only matters
    modulo pi/2 and ``{0, pi/4}`` per layer suffices.
    """
    return list(itertools.product((0, 1), repeat=p))


def optimize_nu(p: int, restarts: int = 50, seed: int = 0, patterns=None,
                dist: ff.Distribution | None = None) -> dict:
    """Maximize ``nu_YY + nu_ZZ`` over ``(alpha_tilde, delta)`` for every beta pattern."""
    patterns = beta_patterns(p) if patterns is None else patterns
    best = None
    streams = np.random.SeedSequence(seed).spawn(len(patterns))
    total = 0
    for pat, ss in zip(patterns, streams):
        obj = InfiniteFormulaObjective(pat, dist)
        rng = np.random.default_rng(ss)
        for _ in range(restarts):
            x0 = rng.uniform(-HALF_PI, HALF_PI, 2 * p)
            res = minimize(obj, x0, method="BFGS", options={"gtol": 1e-10})
            total += 1
            if best is None or res.fun < best[0]:
                best = (float(res.fun), pat, res.x)
    params = InfiniteFormulaObjective(best[1]).params(best[2])
    return {"p": p, "nu": -best[0], "params": params, "restarts": total, "seed": seed}


# --- gauge fixing --------------------------------------------------------------------------


def _mid(x, period):
    """Map into ``[-period/2, period/2)``."""
    return (x + period / 2) % period - period / 2


def _restrict_to_middle(x, period, eps=0.0):
    """Shift by one period when outside ``[-period/2, period/2]``."""
    if x < -period / 2 - eps:
        return x + period
    if x > period / 2 + eps:
        return x - period
    return x


def _snap(x, tol):
    """Pull entries within ``tol`` of a multiple of pi/4 onto it."""
    if tol <= 0:
        return x
    k = np.round(x / (np.pi / 4))
    return np.where(np.abs(x - k * np.pi / 4) <= tol, k * np.pi / 4, x)


def gauge_fix(theta: ParamSchedule, d: int, fix_last: bool = False, snap: float = 0.0,
              zero_last_beta: bool = False) -> ParamSchedule:
    """Canonical representative of ``theta`` under the exact circuit symmetries.

    Symmetries used (``(d+1)``-regular tree, sign-averaged X-axis ansatz):

    * every angle has period pi
    * negating all angles (complex conjugation)
    * for odd ``d`` alpha has period pi/2
    * a pi/2 shift of beta, gamma, delta or (for even ``d``) alpha inserts a
      global Pauli that is commuted into the next layer and absorbed there

    Layers ``1..p-1`` end with beta, gamma, delta in ``[0, pi/2)`` and alpha in
    ``[-pi/4, pi/4]``, with ``alpha_1 >= 0``. With ``fix_last`` the final layer
    is normalized too, which is valid for objectives invariant under global X
    and Z flips (XX, YY, ZZ couplings without fields).

    Optimizer output often sits a hair away from a branch boundary (say
    ``gamma = -1e-9``), which would send it to the far end of the canonical
    range. ``snap > 0`` first moves such entries onto the nearest multiple of
    pi/4 and ignores negatives smaller than ``snap`` in the sign tests. The
    default of zero applies the symmetries exactly.

    ``zero_last_beta`` sets the final beta to zero. The last B layer commutes
    with the last D layer and so acts as a global X rotation at the end of the
    circuit, which leaves XX+YY+ZZ objectives (QMC, Heisenberg) unchanged.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    a, b, c, e = (np.array(v, dtype=float) for v in (theta.alpha, theta.beta, theta.gamma, theta.delta))
    p = theta.p
    a, b, c, e = (_mid(_snap(v, snap), np.pi) for v in (a, b, c, e))
    a, b, c, e = (_snap(v, snap) for v in (a, b, c, e))
    odd = d % 2 == 1
    eps = snap

    def alpha_fix(l):
        if odd:
            a[l] = _restrict_to_middle(a[l], HALF_PI, eps)
        elif a[l] < -np.pi / 4 - eps or a[l] > np.pi / 4 + eps:
            a[l] += HALF_PI if a[l] < 0 else -HALF_PI
            b[l] = _mid(-b[l], np.pi)
            c[l] = _mid(c[l] - HALF_PI, np.pi)

    # fix the sign with alpha_1 already in its middle range so the choice is stable
    alpha_fix(0)
    if a[0] < -eps:
        a, b, c, e = -a, -b, -c, -e
        a, b, c, e = (_mid(v, np.pi) for v in (a, b, c, e))
    if odd:
        a = np.array([_restrict_to_middle(x, HALF_PI, eps) for x in a])

    last = p if fix_last else p - 1
    for l in range(last):
        nxt = l + 1 < p
        alpha_fix(l)
        if b[l] < -eps:
            b[l] += HALF_PI
            c[l] = _mid(-c[l], np.pi)
            if nxt:
                b[l + 1] = _mid(b[l + 1] - HALF_PI, np.pi)
        if c[l] < -eps:
            c[l] += HALF_PI
            e[l] = _mid(-e[l], np.pi)
            if nxt:
                b[l + 1] = _mid(-b[l + 1], np.pi)
                c[l + 1] = _mid(c[l + 1] - HALF_PI, np.pi)
        if e[l] < -eps:
            e[l] += HALF_PI
            if nxt:
                c[l + 1] = _mid(-c[l + 1], np.pi)
                e[l + 1] = _mid(e[l + 1] - HALF_PI, np.pi)
    if zero_last_beta:
        b[-1] = 0.0
    return ParamSchedule(*(_snap(v, snap) for v in (a, b, c, e)))
