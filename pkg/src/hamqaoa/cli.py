"""Command-line driver.

Every subcommand prints one JSON document (or writes it to ``--out``).
Stochastic commands record their seed in the output. ``--manifest`` writes a
sidecar with the full configuration; ``--csv`` writes plot-ready rows.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bench, formula_finite as ff, formula_infinite as fi, graphs, hamiltonians, optimize, simulator
from .params import ParamSchedule

WORKERS_ENV = "HAMQAOA_WORKERS"


class ConfigError(ValueError):
    """Invalid command-line configuration; the message names the offending field."""


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        w = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV}: expected an integer, got {raw!r}") from None
    if w < 1:
        raise ConfigError(f"{WORKERS_ENV}: must be >= 1")
    return w


def _read_json(path, field: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"{field}: file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{field}: {path} is not valid JSON ({exc})") from None


def _load_graph(path) -> graphs.InteractionGraph:
    try:
        return graphs.InteractionGraph.from_dict(_read_json(path, "--graph"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"--graph: {exc}") from None


def _load_params(path, mirrored: bool = False) -> ParamSchedule:
    data = _read_json(path, "--params")
    try:
        theta = ParamSchedule.from_rows(data["rows"]) if "rows" in data else ParamSchedule.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"--params: {exc}") from None
    return theta.mirrored() if mirrored else theta


def _load_signs(path, g) -> np.ndarray:
    try:
        s = np.asarray(_read_json(path, "--signs")["signs"], dtype=int)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"--signs: {exc}") from None
    if len(s) != g.n_vertices:
        raise ConfigError(f"--signs: length {len(s)} does not match {g.n_vertices} vertices")
    return s


def _spec(args, g) -> hamiltonians.HamiltonianSpec:
    kw = {}
    if args.spec == "xxz":
        if args.delta is None or args.h is None:
            raise ConfigError("--delta/--h: both are required for --spec xxz")
        kw = {"delta": args.delta, "h": args.h}
    return hamiltonians.preset(args.spec, g, **kw)


def _ansatz(args, g) -> simulator.Ansatz:
    if getattr(args, "ansatz", None):
        try:
            a = simulator.Ansatz.from_dict(_read_json(args.ansatz, "--ansatz"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"--ansatz: {exc}") from None
    elif getattr(args, "signs", None):
        a = simulator.Ansatz.simplified(_load_signs(args.signs, g))
    else:
        a = simulator.Ansatz.simplified(graphs.choose_signs(g, args.sign_policy, seed=args.seed))
    if a.n != g.n_vertices:
        raise ConfigError(f"--ansatz: {a.n} qubits but the graph has {g.n_vertices} vertices")
    return a


def _dist(spec: str) -> ff.Distribution:
    if spec == "signed-x":
        return ff.signed_x()
    if spec.startswith("pointset:"):
        try:
            return ff.load_pointset(spec.split(":", 1)[1])
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"--dist: {exc}") from None
    raise ConfigError(f"--dist: expected signed-x or pointset:<file>, got {spec!r}")


def _coeffs(spec: str):
    named = {"qmc": ff.QMC_COEFFS, "xy": ff.XY_COEFFS, "heisenberg": ff.HEISENBERG_COEFFS}
    if spec in named:
        return named[spec]
    if spec.startswith("custom:"):
        data = _read_json(spec.split(":", 1)[1], "--coeffs")
        try:
            return tuple(float(data[k]) for k in ("c_I", "c_XX", "c_YY", "c_ZZ"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"--coeffs: {exc}") from None
    raise ConfigError(f"--coeffs: expected qmc, xy, heisenberg or custom:<json>, got {spec!r}")


# --- subcommands ---------------------------------------------------------------------------


def cmd_gen_graph(args):
    params = {"n": args.n}
    if args.degree is not None:
        params["degree"] = args.degree
    if args.prob is not None:
        params["prob"] = args.prob
    if args.kind == "heawood":
        g = graphs.heawood()
    else:
        try:
            g = graphs.generate(args.kind, seed=args.seed, **params)
        except KeyError as exc:
            raise ConfigError(f"--{exc.args[0]}: required for --kind {args.kind}") from None
    out = g.to_dict()
    out["seed"] = args.seed
    return out


def cmd_maxcut(args):
    g = _load_graph(args.graph)
    if args.method == "exact":
        s, val = graphs.max_cut_exact(g)
    else:
        s, val = graphs.max_cut_local_search(g, seed=args.seed, restarts=args.restarts)
    if args.signs_out:
        graphs.save_signs(s, args.signs_out)
    return {"signs": [int(x) for x in s], "cut": val, "method": args.method, "seed": args.seed}


def cmd_exact(args):
    g = _load_graph(args.graph)
    spec = _spec(args, g)
    lam, basis = hamiltonians.extremal_eigenspace(spec, args.which, args.method)
    return {f"lambda_{args.which}": lam, "degeneracy": int(basis.shape[1]),
            "density": lam / g.n_vertices, "n": g.n_vertices, "kind": spec.kind}


def cmd_simulate(args):
    g = _load_graph(args.graph)
    a = _ansatz(args, g)
    theta = _load_params(args.params, args.mirrored)
    spec = _spec(args, g)
    psi = simulator.prepare_hqs(g, a, theta)
    out = {"energy": hamiltonians.energy(spec, psi), "norm_residual": abs(float(np.linalg.norm(psi)) - 1.0)}
    if args.fidelity:
        _, basis = hamiltonians.extremal_eigenspace(spec, args.which)
        out["fidelity"] = hamiltonians.eigenspace_fidelity(basis, psi)
    return out


def cmd_formula_finite(args):
    theta = _load_params(args.params)
    if args.p is not None and args.p != theta.p:
        raise ConfigError(f"--p: {args.p} disagrees with the params file depth {theta.p}")
    coeffs = _coeffs(args.coeffs)
    dist = _dist(args.dist)
    ev = ff.edge_expectations(["XX", "YY", "ZZ"], theta, args.d, dist)
    energy = coeffs[0] + coeffs[1] * ev["XX"] + coeffs[2] * ev["YY"] + coeffs[3] * ev["ZZ"]
    return {"edge_energy": energy, "expectations": ev, "p": theta.p, "d": args.d}


def cmd_formula_infinite(args):
    data = _read_json(args.params, "--params")
    try:
        params = fi.RescaledParams.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"--params: {exc}") from None
    nu_yy = fi.nu(params, "Y", "Y")
    nu_zz = fi.nu(params, "Z", "Z")
    return {"nu_yy": nu_yy, "nu_zz": nu_zz, "objective": nu_yy + nu_zz, "p": params.p}


def cmd_gauge_fix(args):
    theta = _load_params(args.params, args.mirrored)
    fixed = optimize.gauge_fix(theta, args.d, fix_last=args.fix_last, snap=args.snap,
                               zero_last_beta=args.zero_last_beta)
    return fixed.to_dict()


def cmd_agm(args):
    g = _load_graph(args.graph)
    s = _load_signs(args.signs, g) if args.signs else graphs.choose_signs(g, args.sign_policy, seed=args.seed)
    spec = _spec(args, g)
    t, e = simulator.agm_optimize(g, s, spec, step=args.step)
    return {"theta": t, "energy": e, "signs": [int(x) for x in s]}


def _objective(args):
    p = args.p
    if args.objective == "statevector":
        if not args.graph:
            raise ConfigError("--graph: required for the statevector objective")
        g = _load_graph(args.graph)
        spec = _spec(args, g)
        return optimize.StatevectorObjective(g, spec, _ansatz(args, g), p, maximize=args.which == "max"), g, spec
    if args.d is None:
        raise ConfigError("--d: required for the formula-finite objective")
    obj = optimize.FiniteFormulaObjective(_coeffs(args.coeffs), args.d, p, _dist(args.dist),
                                          maximize=args.which == "max")
    return obj, None, None


def cmd_optimize(args):
    if args.p < 1:
        raise ConfigError("--p: must be >= 1")
    if args.restarts < 1:
        raise ConfigError("--restarts: must be >= 1")
    if args.objective == "formula-infinite":
        res = optimize.optimize_nu(args.p, restarts=args.restarts, seed=args.seed)
        return {"strategy": "beta-pattern search", "seed": args.seed, "p": args.p,
                "objective": res["nu"], "params": res["params"].to_dict(), "restarts": res["restarts"]}
    obj, g, spec = _objective(args)
    if args.strategy == "random":
        rep = optimize.strategy_random(obj, restarts=args.restarts, seed=args.seed, method=args.method,
                                       workers=args.workers)
    elif args.strategy == "gi":
        rep = optimize.strategy_gi(obj, args.p, samples_level1=args.restarts, insert=args.insert,
                                   seed=args.seed, method=args.method, workers=args.workers)
    else:
        if g is None:
            raise ConfigError("--strategy ifp: needs the statevector objective with --graph")
        rep = optimize.strategy_ifp(g, spec, obj.ansatz, args.p, _dist(args.dist), args.restarts,
                                    args.seed, maximize=args.which == "max", method=args.method,
                                    workers=args.workers)
    out = rep.to_dict()
    if not args.timing:
        out.pop("wall_time")
    return out


def cmd_bench(args):
    rows, manifest = bench.run_suite(args.suite, seed=args.seed)
    return {"suite": args.suite, "rows": rows, "manifest": manifest}


COMMANDS = {
    "gen-graph": cmd_gen_graph, "maxcut": cmd_maxcut, "exact": cmd_exact, "simulate": cmd_simulate,
    "optimize": cmd_optimize, "formula-finite": cmd_formula_finite, "formula-infinite": cmd_formula_infinite,
    "gauge-fix": cmd_gauge_fix, "agm": cmd_agm, "bench": cmd_bench,
}


def _add_spec_flags(sp, default="qmc"):
    sp.add_argument("--spec", choices=hamiltonians.PRESETS, default=default)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--h", type=float)
    sp.add_argument("--which", choices=("min", "max"), default=None,
                    help="extremal eigenvalue to target (default: max for qmc, min otherwise)")


def _add_ansatz_flags(sp):
    sp.add_argument("--ansatz", help="ansatz JSON")
    sp.add_argument("--signs", help="sign-string JSON")
    sp.add_argument("--sign-policy", choices=("exact", "local_search", "random"), default="exact")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hamqaoa", description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="write the JSON result here instead of stdout")
    ap.add_argument("--csv", help="write series,x,y,yerr,n,seed rows here")
    ap.add_argument("--manifest", help="write a sidecar manifest with the full configuration")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None, help=f"worker processes (env {WORKERS_ENV})")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen-graph")
    sp.add_argument("--kind", required=True, choices=("ring", "path", "complete", "random_regular",
                                                       "erdos_renyi", "heawood"))
    sp.add_argument("--n", type=int, default=14)
    sp.add_argument("--degree", type=int)
    sp.add_argument("--prob", type=float)

    sp = sub.add_parser("maxcut")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--method", choices=("exact", "local_search"), default="exact")
    sp.add_argument("--restarts", type=int, default=32)
    sp.add_argument("--signs-out")

    sp = sub.add_parser("exact")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--method", choices=("auto", "dense", "iterative"), default="auto")
    _add_spec_flags(sp)

    sp = sub.add_parser("simulate")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--params", required=True)
    sp.add_argument("--no-fidelity", dest="fidelity", action="store_false")
    sp.add_argument("--mirrored", action="store_true",
                    help="params use exp(+i beta B) and exp(+i delta D); negate beta and delta on load")
    _add_ansatz_flags(sp)
    _add_spec_flags(sp)

    sp = sub.add_parser("formula-finite")
    sp.add_argument("--params", required=True)
    sp.add_argument("--p", type=int)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--dist", default="signed-x")
    sp.add_argument("--coeffs", default="qmc")

    sp = sub.add_parser("formula-infinite")
    sp.add_argument("--params", required=True)

    sp = sub.add_parser("gauge-fix")
    sp.add_argument("--params", required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--fix-last", action="store_true")
    sp.add_argument("--snap", type=float, default=0.0)
    sp.add_argument("--zero-last-beta", action="store_true")
    sp.add_argument("--mirrored", action="store_true")

    sp = sub.add_parser("agm")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--signs")
    sp.add_argument("--sign-policy", choices=("exact", "local_search", "random"), default="exact")
    sp.add_argument("--step", type=float, default=1e-3)
    _add_spec_flags(sp)

    sp = sub.add_parser("optimize")
    sp.add_argument("--objective", choices=("statevector", "formula-finite", "formula-infinite"),
                    default="statevector")
    sp.add_argument("--strategy", choices=("random", "gi", "ifp"), default="random")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--restarts", type=int, default=10)
    sp.add_argument("--method", choices=("auto", "nelder-mead", "bfgs"), default="auto")
    sp.add_argument("--insert", choices=("end", "all"), default="end")
    sp.add_argument("--graph")
    sp.add_argument("--d", type=int)
    sp.add_argument("--dist", default="signed-x")
    sp.add_argument("--coeffs", default="qmc")
    sp.add_argument("--timing", action="store_true", help="include wall time (breaks byte reproducibility)")
    _add_ansatz_flags(sp)
    _add_spec_flags(sp)

    sp = sub.add_parser("bench")
    sp.add_argument("--suite", required=True, choices=sorted(bench.SUITES))
    return ap


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=bench.CSV_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in bench.CSV_FIELDS})


def run(argv=None) -> dict:
    args = build_parser().parse_args(argv)
    if args.workers is None:
        args.workers = _default_workers()
    if hasattr(args, "which") and args.which is None:
        args.which = "max" if getattr(args, "spec", "qmc") == "qmc" else "min"
    result = COMMANDS[args.command](args)
    text = json.dumps(result, indent=2, sort_keys=True, default=float)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    rows = result.get("rows") if isinstance(result, dict) else None
    if args.csv and rows is not None:
        _write_csv(args.csv, rows)
    if args.manifest:
        config = {k: v for k, v in vars(args).items() if k not in ("out", "csv", "manifest")}
        side = {"command": args.command, "config": config, "seed": args.seed}
        if isinstance(result, dict) and "manifest" in result:
            side["suite"] = result["manifest"]
        Path(args.manifest).write_text(json.dumps(side, indent=2, sort_keys=True, default=str) + "\n")
    return result


def main(argv=None) -> int:
    try:
        run(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
