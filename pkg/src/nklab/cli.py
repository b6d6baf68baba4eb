"""Command-line entry point: ``nklab <subcommand> ...``.

Exit codes: 0 when everything ran and every hard check passed, 1 when a
check failed, 2 for usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, combinatorics, enumeration, experiments, paths, sampler, theory
from ._backend import NAME as BACKEND
from .landscape import Genome, Landscape, LandscapeSpec, k_from_alpha

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _resolve_k(args) -> int:
    if args.k is not None:
        return args.k
    if args.alpha is not None:
        return k_from_alpha(args.n, args.alpha)
    raise UsageError("give --k or --alpha")


def _landscape(args) -> Landscape:
    return Landscape(LandscapeSpec(n=args.n, k=_resolve_k(args), seed=args.seed))


# -- subcommands -------------------------------------------------------------------------

def cmd_theory(args) -> int:
    out: dict = {}
    if args.beta_c:
        out["beta_c"] = theory.BETA_C
    if args.alpha_star:
        out["alpha_star"] = theory.ALPHA_STAR
    if args.beta_p is not None:
        out["beta_p"] = theory.beta_p(args.beta_p)
    if args.free_energy is not None:
        out["free_energy"] = theory.limiting_free_energy(args.free_energy)
    if args.gap is not None:
        out["gap"] = theory.gap_bounds(*args.gap).to_dict()
    if not out:
        raise UsageError("theory: choose at least one of --beta-c, --alpha-star, --beta-p, --free-energy, --gap")
    if args.json:
        _emit(args, json.dumps(out, sort_keys=True))
    else:
        lines = []
        for key, v in out.items():
            if isinstance(v, dict):
                lines += [f"{a}: {experiments.format_value(b)}" for a, b in v.items()]
            elif len(out) == 1:
                lines.append(f"{v:.6f}")
            else:
                lines.append(f"{key}: {v:.6f}")
        _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_count(args) -> int:
    t = combinatorics.count_by_overlap(args.n, _resolve_k(args))
    _emit(args, t.to_json() if args.json else t.compact())
    return EXIT_OK


def cmd_exact(args) -> int:
    land = _landscape(args)
    e = land.energies()
    gs = enumeration.ground_state(land, e)
    out = {"n": land.n, "k": land.k, "seed": land.spec.seed, "M": gs.M,
           "sigma_star": str(gs.sigma_star), "argmax_ties": gs.argmax_ties}
    if args.beta is not None:
        g = enumeration.exact_free_energy(land, args.beta, e)
        out.update(beta=args.beta, F=g.F, mean_energy=g.mean_energy, p_Q1=g.p_Q1)
    if args.json:
        _emit(args, json.dumps(out, sort_keys=True))
    else:
        _emit(args, "\n".join(f"{k}: {experiments.format_value(v)}" for k, v in out.items()))
    return EXIT_OK


def cmd_sample(args) -> int:
    land = _landscape(args)
    t0 = time.perf_counter()
    if args.op == "max":
        m = sampler.estimate_max(land, (args.chains, args.steps), args.rng_seed)
        est = sampler.EstimateWithError(m.value, float("nan"), args.chains)
    elif args.beta is None:
        raise UsageError(f"sample --op {args.op} needs --beta")
    elif args.op == "free-energy":
        est = sampler.estimate_free_energy(land, args.beta, args.chains, args.steps, rng_seed=args.rng_seed)
    elif args.op == "mean-energy":
        est = sampler.mean_energy(land, args.beta, args.steps, args.chains, args.rng_seed)
    else:
        st = sampler.replica_overlap_stats(land, args.beta, args.chains, max(args.steps // land.n, 8),
                                           rng_seed=args.rng_seed)
        est = st.p_Q1
    wall = (time.perf_counter() - t0) * 1000.0
    line = est.to_json(args.op, land.spec.to_dict(), args.beta, [args.seed, args.seed], wall)
    if args.json:
        _emit(args, line)
    else:
        _emit(args, f"{est.value:.10g} +- {est.std_error:.3g} (n={est.n_samples})")
    return EXIT_OK


def cmd_path(args) -> int:
    land = _landscape(args)
    if args.endpoints == "near-fittest":
        a, c, _ = experiments.near_fittest_endpoints(land, args.eta)
    else:
        rng = np.random.default_rng(args.seed)
        a, c = Genome.random(args.n, rng), Genome.random(args.n, rng)
    rep = paths.path_report(land, paths.build_bridge(a, c, args.steps))
    if args.json:
        _emit(args, rep.to_json())
    else:
        rows = [{"l": l, "Q": q, "R": r, "fitness": f} for l, q, r, f in rep.rows()]
        _emit(args, experiments.rows_to_csv(rows))
    return EXIT_OK


def cmd_orthant(args) -> int:
    p = theory.orthant_prob(args.t, args.x)
    out = {"t": args.t, "x": args.x, "probability": p}
    if args.s is not None and args.n is not None:
        out["bound"] = theory.lemma2_3_bound(args.t, args.s, args.n)
    _emit(args, json.dumps(out, sort_keys=True) if args.json else experiments.format_value(p))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.diff:
        diffs = experiments.diff_runs(*args.diff)
        _emit(args, json.dumps({"differing": diffs}) if args.json else "\n".join(diffs) or "identical")
        return EXIT_FAIL if diffs else EXIT_OK
    if not args.config:
        raise UsageError("sweep needs a config file (or --diff A B)")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    cfg = experiments.ExperimentConfig.from_json(text)
    if args.seed is not None:
        cfg.seeds["base"] = args.seed
    out_dir = args.out or cfg.output.get("dir", "results")
    try:
        res = experiments.run(cfg, out_dir, args.threads)
    except PermissionError as exc:
        raise UsageError(f"output directory not writable: {exc}") from None
    summary = {"experiment": cfg.experiment, "passed": res.passed, "rows": len(res.rows),
               "dir": str(out_dir), "files": res.files}
    sys.stdout.write((json.dumps(summary, sort_keys=True) if args.json
                      else f"{cfg.experiment}: {'PASS' if res.passed else 'FAIL'} ({len(res.rows)} rows) -> {out_dir}") + "\n")
    return EXIT_OK if res.passed else EXIT_FAIL


# -- parser --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="disorder seed (default 0)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", default=None, help="write output to this path (a directory for sweep)")

    def land_args(p):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)

    ap = argparse.ArgumentParser(prog="nklab", description="NK fitness landscape laboratory")
    ap.add_argument("--version", action="version", version=f"nklab {__version__} ({BACKEND} kernels)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", parents=[common], help="closed-form constants and curves")
    p.add_argument("--beta-c", action="store_true")
    p.add_argument("--alpha-star", action="store_true")
    p.add_argument("--beta-p", type=int, default=None, metavar="P")
    p.add_argument("--free-energy", type=float, default=None, metavar="BETA")
    p.add_argument("--gap", type=float, nargs=2, default=None, metavar=("ALPHA", "DELTA"))
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("count", parents=[common], help="exact genome counts by epistatic overlap")
    land_args(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("exact", parents=[common], help="exhaustive ground state and free energy")
    land_args(p)
    p.add_argument("--beta", type=float, default=None)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("sample", parents=[common], help="Monte Carlo estimates")
    land_args(p)
    p.add_argument("--op", choices=["free-energy", "mean-energy", "max", "overlap"], default="free-energy")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--steps", type=int, default=20_000)
    p.add_argument("--chains", type=int, default=sampler.MIN_CHAINS)
    p.add_argument("--rng-seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("path", parents=[common], help="bridge path between two genomes as CSV")
    land_args(p)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--endpoints", choices=["random", "near-fittest"], default="random")
    p.add_argument("--eta", type=float, default=0.2)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("sweep", parents=[common], help="run a registered experiment from a JSON config")
    p.add_argument("config", nargs="?", default=None)
    p.add_argument("--threads", type=int, default=None, help="worker processes (default: THREADS or 1)")
    p.add_argument("--diff", nargs=2, metavar=("DIR_A", "DIR_B"), default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("orthant", parents=[common], help="bivariate normal orthant probability")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.set_defaults(func=cmd_orthant)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command != "sweep" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        sys.stderr.write(f"nklab {args.command}: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
