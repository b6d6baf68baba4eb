"""Registered experiments and the deterministic sweep runner.

An experiment maps one point of a Cartesian parameter range (plus the seed
list and effort knobs) to a list of flat result rows.  Rows may carry a
boolean ``pass`` column: the run succeeds iff every such flag is true.
Points are evaluated in a process pool whose size comes from the
``THREADS`` environment variable, and results are written in point order,
so outputs never depend on the worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import combinatorics, enumeration, paths, sampler, theory
from .landscape import Genome, Landscape, LandscapeSpec, k_from_alpha

__all__ = ["ExperimentConfig", "RunResult", "EXPERIMENTS", "run", "build_id", "format_value",
           "rows_to_csv", "rows_to_jsonl", "diff_runs", "worker_count"]

AXES = ("n", "k", "alpha", "beta", "s", "delta", "p", "t", "steps")


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)  # axis -> list of values
    seeds: dict = field(default_factory=lambda: {"base": 0, "count": 1})
    effort: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"dir": "results", "format": "csv"})

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        for axis, vals in self.params.items():
            if axis not in AXES:
                raise ValueError(f"unknown parameter axis {axis!r}")
            if not isinstance(vals, list) or not vals:
                raise ValueError(f"parameter range {axis!r} must be a non-empty list")
        missing = [a for a in EXPERIMENTS[self.experiment].required if a not in self.params]
        if missing:
            raise ValueError(f"{self.experiment} needs parameter ranges {missing}")
        if int(self.seeds.get("count", 0)) < 1:
            raise ValueError("seed count must be at least 1")
        if self.output.get("format", "csv") not in ("csv", "jsonl"):
            raise ValueError("output format must be csv or jsonl")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if "experiment" not in d:
            raise ValueError("config needs an 'experiment' field")
        params = {a: d[a] for a in AXES if a in d}
        params.update(d.get("params", {}))
        return cls(d["experiment"], params, dict(d.get("seeds", {"base": 0, "count": 1})),
                   dict(d.get("effort", {})), dict(d.get("output", {"dir": "results", "format": "csv"})))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "params": self.params, "seeds": self.seeds,
                "effort": self.effort, "output": self.output}

    def seed_list(self) -> list[int]:
        base, count = int(self.seeds.get("base", 0)), int(self.seeds["count"])
        return [sampler.disorder_seed(base, i) for i in range(count)]

    def points(self) -> list[dict]:
        axes = [a for a in AXES if a in self.params]
        return [dict(zip(axes, combo)) for combo in itertools.product(*(self.params[a] for a in axes))]


# -- helpers ---------------------------------------------------------------------------

def _k_of(point: dict) -> int:
    if "k" in point:
        return int(point["k"])
    return k_from_alpha(int(point["n"]), float(point["alpha"]))


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else float("nan")
    return float(x.mean()), se


def _landscape(n: int, k: int, seed: int) -> Landscape:
    return Landscape(LandscapeSpec(n=n, k=k, seed=seed))


# -- experiments -----------------------------------------------------------------------------

def exp_free_energy(point, seeds, effort):
    n, k, beta = int(point["n"]), _k_of(point), float(point["beta"])
    fs = [enumeration.exact_free_energy(_landscape(n, k, s), beta).F for s in seeds]
    mean, se = _mean_se(fs)
    annealed = theory.LN2 + beta * beta / 2.0
    # Jensen: E F <= ln 2 + beta^2 / 2 at every N
    ok = len(fs) < 2 or mean <= annealed + 3.0 * se
    return [{"n": n, "k": k, "beta": beta, "value": mean, "std_error": se, "n_seeds": len(fs),
             "theory_annealed": annealed, "theory_limit": theory.limiting_free_energy(beta), "pass": ok}]


def exp_max_fitness(point, seeds, effort):
    n, k = int(point["n"]), _k_of(point)
    exact = n <= int(effort.get("exact_limit", 24))
    ms = []
    for s in seeds:
        land = _landscape(n, k, s)
        if exact:
            ms.append(enumeration.ground_state(land).M)
        else:
            eff = (int(effort.get("restarts", 2)), int(effort.get("steps", 20_000)))
            ms.append(sampler.estimate_max(land, eff).value)
    mean, se = _mean_se(ms)
    # E max of equal-variance Gaussians is at most sqrt(2 N ln 2^N) / N = beta_c
    ok = len(ms) < 2 or mean <= theory.BETA_C + 3.0 * se
    return [{"n": n, "k": k, "value": mean, "std_error": se, "n_seeds": len(ms), "exact": exact,
             "theory_beta_c": theory.BETA_C, "pass": ok}]


def exp_overlap_law(point, seeds, effort):
    n, k, beta = int(point["n"]), _k_of(point), float(point["beta"])
    mq, pq1, pq0, mr, norm = [], [], [], [], []
    for s in seeds:
        g = enumeration.exact_overlap_law(_landscape(n, k, s), beta)
        law_q = g.law_of_Q()
        mq.append(g.mean_Q)
        pq1.append(law_q.get(n, 0.0))
        pq0.append(law_q.get(0, 0.0))
        mr.append(sum(r * p for r, p in g.law_of_R().items()) / n)
        norm.append(abs(sum(g.overlap_law.values()) - 1.0))
    rows = {"n": n, "k": k, "beta": beta}
    for name, v in (("mean_Q", mq), ("p_Q1", pq1), ("p_Q0", pq0), ("mean_R", mr)):
        rows[name], rows[name + "_se"] = _mean_se(v)
    rows["theory_p_Q1_rem_limit"] = max(0.0, 1.0 - theory.BETA_C / beta) if beta > 0 else 0.0
    rows["pass"] = max(norm) <= 1e-12
    return [rows]


def exp_gap_check(point, seeds, effort):
    alpha, delta = float(point["alpha"]), float(point["delta"])
    g = theory.gap_bounds(alpha, delta)
    row = {"alpha": alpha, "delta": delta, "high_epistasis": g.high_epistasis, "E": g.E,
           "rhs_Q": g.rhs_Q, "rhs_R": g.rhs_R, "E_prime": g.E_prime, "rhs_Q_low": g.rhs_Q_low,
           "delta_star": g.delta_star}
    if "n" in point:
        n = int(point["n"])
        k = k_from_alpha(n, alpha)
        gaps = []
        for s in seeds:
            land = _landscape(n, k, s)
            e = land.energies()
            m = float(e.max()) / n
            cm = enumeration.coupled_max(land, enumeration.ConstraintSet.q_strictly_between(), e)
            gaps.append(2 * m - cm.value)
        row["n"], row["k"] = n, k
        row["empirical_gap"], row["empirical_gap_se"] = _mean_se(gaps)
    return [row]


def exp_count_check(point, seeds, effort):
    n, k = int(point["n"]), _k_of(point)
    t = combinatorics.count_by_overlap(n, k)
    ok = t.total == 1 << n
    brute = n <= int(effort.get("brute_limit", 16))
    if brute:
        ok = ok and t == combinatorics.count_by_overlap_bruteforce(n, k)
    return [{"n": n, "k": k, "counts": t.compact(), "total": str(t.total), "brute_checked": brute, "pass": ok}]


def exp_second_moment(point, seeds, effort):
    n, k, s = int(point["n"]), _k_of(point), float(point["s"])
    t = combinatorics.count_by_overlap(n, k)
    ratio, bound = theory.second_moment_ratio(n, k, s, t.as_dict())
    mf = theory.min_f(k / n, s)[1] if k > 0 else float("nan")
    return [{"n": n, "k": k, "s": s, "ratio": ratio, "bound": bound, "min_f": mf, "pass": ratio <= bound}]


def exp_theory_curves(point, seeds, effort):
    row = {}
    if "alpha" in point:
        a = float(point["alpha"])
        row["alpha"] = a
        if "delta" in point:
            d = float(point["delta"])
            g = theory.gap_bounds(a, d)
            row.update(delta=d, E=g.E, E_prime=g.E_prime)
        if a <= theory.ALPHA_STAR:
            row.update(c1=theory.c1(a), c2=theory.c2(a), Delta=theory.discriminant(a))
    if "beta" in point:
        b = float(point["beta"])
        row.update(beta=b, F_limit=theory.limiting_free_energy(b))
    if "p" in point:
        p = int(point["p"])
        row.update(p=p, beta_p=theory.beta_p(p))
    return [row]


def exp_path_check(point, seeds, effort):
    n_loci, k, steps = int(point["n"]), _k_of(point), int(point["steps"])
    eta = float(effort.get("eta", 0.2))
    alpha = float(point.get("alpha", k / n_loci))
    endpoints = effort.get("endpoints", "random")
    rows = []
    for s in seeds:
        land = _landscape(n_loci, k, s)
        if endpoints == "near_fittest":
            e = land.energies()
            a, c, m = near_fittest_endpoints(land, eta, e)
        else:
            rng = np.random.default_rng(s)
            a, c, m = Genome.random(n_loci, rng), Genome.random(n_loci, rng), None
        rep = paths.path_report(land, paths.build_bridge(a, c, steps))
        row = {"n": n_loci, "k": k, "steps": steps, "seed": s, "min_Q": rep.min_Q, "min_R": rep.min_R,
               "min_interior_fitness": rep.min_interior_fitness,
               "q_bound": paths.q_step_bound(steps, k / n_loci), "r_bound": paths.r_step_bound(steps),
               "q_bound_ok": all(rep.q_bound_ok), "r_bound_ok": all(rep.r_bound_ok),
               "exact_bounds_ok": rep.exact_bounds_hold, "regime": paths.regime_holds(alpha, eta)}
        if m is not None:
            flags = paths.verify_theorem_bounds(rep, alpha, steps, eta, m)
            row.update(M=m, fitness_threshold=flags.threshold, fitness_ok=flags.fitness_ok)
        row["pass"] = rep.exact_bounds_hold
        rows.append(row)
    return rows


def near_fittest_endpoints(land: Landscape, eta: float, e: np.ndarray | None = None):
    """Fittest genome and the member of ``{H/N >= M - eta}`` farthest from it in Hamming distance.

    Ties in distance go to the fitter genome, then the smaller bit pattern.
    Returns ``(sigma_hat, sigma_check, M)``.
    """
    e = land.energies() if e is None else e
    n = land.n
    gs = enumeration.ground_state(land, e)
    cand = np.flatnonzero(e / n >= gs.M - eta)
    dist = np.bitwise_count(cand.astype(np.uint64) ^ np.uint64(gs.sigma_star.bits))
    order = np.lexsort((cand, -e[cand], -dist.astype(np.int64)))
    return gs.sigma_star, Genome(n, int(cand[order[0]])), gs.M


def exp_chaos(point, seeds, effort):
    n, k, s = int(point["n"]), _k_of(point), float(point["s"])
    base = seeds[0]
    eff = (int(effort.get("restarts", 2)), int(effort.get("steps", 5_000)))
    est = sampler.chaos_probe(base, s, n, k, len(seeds), eff)
    return [{"n": n, "k": k, "s": s, "phi": est.value, "std_error": est.std_error, "n_seeds": est.n_samples}]


def exp_concentration(point, seeds, effort):
    n, k, beta = int(point["n"]), _k_of(point), float(point["beta"])
    ts = [float(x) for x in effort.get("t_grid", [0.05, 0.1, 0.2, 0.3, 0.5])]
    res = sampler.concentration_probe(n, k, beta, len(seeds), ts, seeds[0])
    return [{"n": n, "k": k, "beta": beta, **r, "pass": r["below"]} for r in res["rows"]]


def exp_monotonicity(point, seeds, effort):
    n = int(point["n"])
    k_list = [int(x) for x in effort.get("k_list", [0, 1, n // 2, n - 1])]
    res = sampler.monotonicity_probe(n, k_list, len(seeds), seeds[0])
    return [{"n": n, **r, "nondecreasing": res["nondecreasing"], "pass": res["nondecreasing"]}
            for r in res["rows"]]


@dataclass(frozen=True)
class Experiment:
    fn: Callable
    required: tuple[str, ...]


EXPERIMENTS: dict[str, Experiment] = {
    "free_energy_convergence": Experiment(exp_free_energy, ("n", "beta")),
    "max_fitness_convergence": Experiment(exp_max_fitness, ("n",)),
    "overlap_law": Experiment(exp_overlap_law, ("n", "beta")),
    "gap_check": Experiment(exp_gap_check, ("alpha", "delta")),
    "count_check": Experiment(exp_count_check, ("n",)),
    "second_moment": Experiment(exp_second_moment, ("n", "s")),
    "theory_curves": Experiment(exp_theory_curves, ()),
    "path_check": Experiment(exp_path_check, ("n", "steps")),
    "chaos": Experiment(exp_chaos, ("n", "s")),
    "concentration": Experiment(exp_concentration, ("n", "beta")),
    "monotonicity": Experiment(exp_monotonicity, ("n",)),
}


# -- output formatting -----------------------------------------------------------------------

def format_value(v) -> str:
    """Locale-free text form: floats with 17 significant digits, empty for ``None``."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _columns(rows: list[dict]) -> list[str]:
    cols: list[str] = []
    for r in rows:
        for c in r:
            if c not in cols:
                cols.append(c)
    return cols


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    cols = _columns(rows)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([format_value(r.get(c)) for c in cols])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def rows_to_jsonl(rows: list[dict]) -> str:
    return "".join(json.dumps({k: _jsonable(v) for k, v in r.items()}, sort_keys=True) + "\n" for r in rows)


def build_id() -> str:
    """Git-style content hash of the package sources (stable across installs)."""
    h = hashlib.sha1()
    root = Path(__file__).parent
    for p in sorted(root.glob("*.py")) + sorted(root.glob("*.pyx")):
        data = p.read_bytes()
        h.update(f"blob {len(data)}\0".encode() + data)
    return h.hexdigest()[:12]


def worker_count() -> int:
    raw = os.environ.get("THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"THREADS must be an integer, got {raw!r}") from None


def _eval_point(name: str, point: dict, seeds: list[int], effort: dict) -> list[dict]:
    return EXPERIMENTS[name].fn(point, seeds, effort)


@dataclass
class RunResult:
    rows: list[dict]
    passed: bool
    files: dict[str, str]  # file name -> sha256
    wall_time_ms: float


def evaluate(config: ExperimentConfig, threads: int | None = None) -> list[dict]:
    """All rows of ``config`` in point order."""
    threads = worker_count() if threads is None else threads
    pts = config.points() or [{}]
    seeds = config.seed_list()
    args = [(config.experiment, p, seeds, config.effort) for p in pts]
    if threads > 1 and len(pts) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_eval_point, *zip(*args)))
    else:
        chunks = [_eval_point(*a) for a in args]
    return [row for chunk in chunks for row in chunk]


def run(config: ExperimentConfig, out_dir: str | Path | None = None, threads: int | None = None) -> RunResult:
    """Evaluate ``config`` and write data, a self-describing record and a manifest."""
    t0 = time.perf_counter()
    rows = evaluate(config, threads)
    passed = all(bool(r.get("pass", True)) for r in rows)
    out = Path(out_dir if out_dir is not None else config.output.get("dir", "results"))
    out.mkdir(parents=True, exist_ok=True)
    fmt = config.output.get("format", "csv")
    data_name = f"{config.experiment}.{fmt}"
    data = rows_to_csv(rows) if fmt == "csv" else rows_to_jsonl(rows)
    wall = (time.perf_counter() - t0) * 1000.0
    record = {"experiment": config.experiment,
              "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
              "build_id": build_id(), "config": config.to_dict(), "passed": passed,
              "data_file": data_name, "n_rows": len(rows), "wall_time_ms": wall}
    files = {data_name: data.encode(), "record.json": (json.dumps(record, indent=2, sort_keys=True) + "\n").encode()}
    digests = {}
    for name, blob in files.items():
        (out / name).write_bytes(blob)
        digests[name] = hashlib.sha256(blob).hexdigest()
    manifest = {"files": [{"name": k, "sha256": v} for k, v in sorted(digests.items())]}
    (out / "MANIFEST.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return RunResult(rows, passed, digests, wall)


def diff_runs(dir_a: str | Path, dir_b: str | Path) -> list[str]:
    """Names of data files whose bytes differ between two run directories.

    ``record.json`` carries a timestamp and wall time and is skipped.
    """
    a, b = Path(dir_a), Path(dir_b)
    names = {p.name for p in a.iterdir()} | {p.name for p in b.iterdir()}
    diffs = []
    for name in sorted(names - {"record.json", "MANIFEST.json"}):
        pa, pb = a / name, b / name
        if not (pa.exists() and pb.exists()) or pa.read_bytes() != pb.read_bytes():
            diffs.append(name)
    return diffs
