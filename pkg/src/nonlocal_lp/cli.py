"""Command-line entry point ``nonlocal-lp``.

Subcommands
-----------
validate     run every hypothesis check and report margins
verify       run an ensemble suite (``--suite norms|operator|semigroup|regularity``)
solve        solve the Cauchy problem by the configured route
sample-levy  simulate Levy paths and write their values and jump ledgers

Exit codes: 0 success, 1 verification or hypothesis failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ROUTES, RunConfig, load_config
from .errors import (ArgumentError, ConfigurationError, HypothesisViolation, NonlocalError,
                     UnsupportedConfiguration)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SUITE_NAMES = ("norms", "operator", "semigroup", "regularity")


class _UsageError(Exception):
    pass


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump(obj) -> str:
    from .verify import _clean
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _emit(out: Path | None, name: str, payload: dict) -> None:
    text = _dump(payload)
    _write(out, name, text)
    sys.stdout.write(text)


# -- validate ----------------------------------------------------------------

def cmd_validate(cfg: RunConfig, out: Path | None, args) -> int:
    from .solver import Problem, validate_problem
    if "initial" in cfg.section("problem"):
        prob = cfg.problem(check=False)
    else:
        grid = cfg.grid()
        block = cfg.section("problem")
        prob = Problem(cfg.measure(), grid.zeros(), cfg.coefficient(), cfg.drift(), cfg.forcing(grid),
                       float(block.get("T", 1.0)), float(block.get("p", 2.0)), cfg.scheme(grid), False)
    checks = validate_problem(prob)
    passed = all(c.passed for c in checks)
    _emit(out, "validate.json", {"config_digest": cfg.digest, "passed": passed,
                                 "failed": [c.name for c in checks if not c.passed],
                                 "checks": [c.to_dict() for c in checks]})
    return EXIT_OK if passed else EXIT_FAIL


# -- verify ------------------------------------------------------------------

def _suite_runs(name: str, block: dict, seed: int):
    from . import verify as v
    size = int(block.get("ensemble_size", 100))
    if size <= 0:
        raise ArgumentError("ensemble_size must be positive")
    n = int(block.get("n", 64))
    alphas = tuple(float(a) for a in block.get("alphas", (0.5, 1.0, 1.5)))
    ps = tuple(float(p) for p in block.get("ps", (1.5, 2.0, 4.0)))
    n_paths = int(block.get("n_paths", 10_000))
    if name == "norms":
        return [lambda: v.norms_suite(ps, n, size, seed)]
    if name == "operator":
        return [lambda: v.operator_symbol_suite(alphas),
                lambda: v.equivalence_suite(alphas, ps, n, size, seed),
                lambda: v.equivalence_suite(alphas, ps, n, size, seed, variable=True),
                lambda: v.dini_remainder_suite(size=min(size, 50), seed=seed)]
    if name == "semigroup":
        return [lambda: v.semigroup_suite(alphas, n_paths, seed),
                lambda: v.maximal_regularity_suite(alphas, ps, min(size, 50), n, seed=seed)]
    if name == "regularity":
        return [lambda: v.apriori_suite(min(size, 20), seed, n),
                lambda: v.continuity_suite(n, seed=seed),
                lambda: v.nonlinear_suite()]
    raise _UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)}")


def cmd_verify(cfg: RunConfig, out: Path | None, args) -> int:
    if not args.suite:
        raise _UsageError("verify needs --suite")
    block = cfg.section("verify")
    seed = args.seed if args.seed is not None else int(block.get("seed", 0))
    results = [run() for run in _suite_runs(args.suite, block, seed)]
    summary = {"config_digest": cfg.digest, "suite": args.suite, "seed": seed,
               "passed": all(r.passed for r in results), "results": {}}
    for r in results:
        data = r.to_json()
        data["summary"].pop("seconds", None)
        summary["results"][r.name] = data
        for key in ("c_lower", "C_upper"):
            if key in r.summary and r.name == "equivalence-constant":
                summary[key] = r.summary[key]
        _write(out, f"verify_{args.suite}_{r.name}.csv", f"# config_digest={cfg.digest}\n" + r.to_csv())
    _emit(out, f"verify_{args.suite}.json", summary)
    for r in results:
        sys.stderr.write(r.line() + "\n")
    return EXIT_OK if summary["passed"] else EXIT_FAIL


# -- solve -------------------------------------------------------------------

def _solve_nonlinear(cfg: RunConfig):
    from .nonlinear import quadratic_potential, solve_nonlinear, wobble_potential
    block = cfg.section("nonlinear")
    name = block.get("potential", "wobble")
    potentials = {"quadratic": quadratic_potential, "wobble": wobble_potential}
    if name not in potentials:
        raise ConfigurationError(f"unknown potential {name!r}")
    grid = cfg.grid()
    solver = cfg.section("solver")
    return solve_nonlinear(cfg.initial(grid), potentials[name](), cfg.alpha, int(solver.get("n_steps", 200)),
                           float(cfg.section("problem").get("T", 1.0)), float(block.get("kappa", 1.0)),
                           cfg.scheme(grid))


def _solution_csv(sol, digest: str) -> str:
    energy = sol.meta.get("energy")
    lines = [f"# config_digest={digest}"]
    grid = sol.grid
    xcols = ["x"] if grid.d == 1 else ["x1", "x2"]
    lines.append(",".join(["t"] + xcols + ["u"] + (["energy"] if energy is not None else [])))
    for i, (t, u) in enumerate(zip(sol.times, sol.states)):
        for x, val in zip(grid.points, np.asarray(u.nodal).ravel()):
            row = [repr(float(t))] + [repr(float(c)) for c in x] + [repr(float(val))]
            if energy is not None:
                row.append(repr(float(energy[i])))
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cmd_solve(cfg: RunConfig, out: Path | None, args) -> int:
    from .norms import spacetime_norms
    from .solver import apriori_report, solve_continuity, solve_duhamel, solve_imex
    solver = cfg.section("solver")
    route = solver.get("route")
    if route not in ROUTES:
        raise ConfigurationError(f"solver.route must be one of {ROUTES}")
    manifest = {"config_digest": cfg.digest, "route": route}
    if route == "nonlinear":
        sol = _solve_nonlinear(cfg)
        energy = np.asarray(sol.meta["energy"])
        manifest.update(residual=sol.residual, energy_start=energy[0], energy_end=energy[-1],
                        energy_monotone=bool(np.all(np.diff(energy) <= 0)))
    else:
        prob = cfg.problem(check=True)
        steps = int(solver.get("n_steps", 64))
        if route == "duhamel":
            sol = solve_duhamel(prob, steps)
        elif route == "imex":
            sol = solve_imex(prob, steps)
        else:
            res = solve_continuity(prob, steps, float(solver.get("tol", 1e-8)))
            sol = res.solution
            manifest.update(iterations=res.iterations, contraction_estimates=res.contraction_estimates)
        norms = spacetime_norms(sol, prob.alpha, prob.p)
        manifest.update(residual=sol.residual, norms=norms.to_dict(),
                        apriori=apriori_report(sol, prob, 0).to_dict())
    manifest.update(n_steps=len(sol.times) - 1, T=float(sol.times[-1]))
    _write(out, "solution.csv", _solution_csv(sol, cfg.digest))
    _emit(out, "solution.json", manifest)
    return EXIT_OK


# -- sample-levy -------------------------------------------------------------

def cmd_sample(cfg: RunConfig, out: Path | None, args) -> int:
    from .semigroup import SamplerConfig, sample_path
    block = cfg.section("sampler")
    nu = cfg.measure()
    seed = args.seed if args.seed is not None else int(block.get("seed", 0))
    sc = SamplerConfig(r_cut=float(block.get("r_cut", 0.05)), n_paths=int(block.get("n_paths", 16)), seed=seed,
                       gaussian_correction=bool(block.get("gaussian_correction", True)),
                       lam=float(block.get("lam", 1.0)), vartheta=block.get("vartheta", 0.0))
    if sc.n_paths <= 0:
        raise ArgumentError("n_paths must be positive")
    t_end = float(block.get("t_end", 1.0))
    nodes = np.linspace(0.0, t_end, int(block.get("n_nodes", 11)))
    xcols = [f"x{i + 1}" for i in range(nu.d)]
    paths = [f"# config_digest={cfg.digest}", ",".join(["path", "t"] + xcols)]
    jumps = [f"# config_digest={cfg.digest}", ",".join(["path", "time"] + [f"jump{i + 1}" for i in range(nu.d)])]
    finals = []
    for i in range(sc.n_paths):
        s = sample_path(nu, sc, t_end, nodes, path_index=i)
        for t, x in zip(s.time_nodes, s.increments):
            paths.append(",".join([str(i), repr(float(t))] + [repr(float(c)) for c in x]))
        for t, j in zip(s.jump_times, s.jumps):
            jumps.append(",".join([str(i), repr(float(t))] + [repr(float(c)) for c in j]))
        finals.append(s.increments[-1])
    _write(out, "levy_paths.csv", "\n".join(paths) + "\n")
    _write(out, "levy_jumps.csv", "\n".join(jumps) + "\n")
    finals = np.asarray(finals)
    _emit(out, "levy_summary.json", {"config_digest": cfg.digest, "seed": seed, "n_paths": sc.n_paths,
                                     "t_end": t_end, "r_cut": sc.r_cut, "mean_final": finals.mean(axis=0).tolist()})
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "verify": cmd_verify, "solve": cmd_solve, "sample-levy": cmd_sample}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-lp", description="Nonlocal parabolic equations on the torus.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the configured seed")
    parser.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    parser.add_argument("--suite", default=None, help="verification suite for 'verify'")
    return parser


def _cap_threads(n: int) -> None:
    if n < 1:
        raise ArgumentError("--threads must be at least 1")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(n)
    except ImportError:
        pass


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    out = Path(args.out) if args.out else None
    try:
        if args.threads is not None:
            _cap_threads(args.threads)
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, out, args)
    except (_UsageError, ConfigurationError, ArgumentError, UnsupportedConfiguration) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except HypothesisViolation as exc:
        sys.stderr.write(f"hypothesis violated: {exc}\n")
        return EXIT_FAIL
    except NonlocalError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
