"""Command-line front end.

Subcommands: bench (runtime scaling CSV), solve (run solvers on a stored
cost matrix), schedule (print the beta cooling table), demo-demix (train
the toy linear demixer). Flags may also be supplied through a JSON config
file (--config) whose keys mirror the long flag names; explicit flags win.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .assignment import (
    MAX_ENUMERATION_N,
    brute_force_pit,
    hungarian,
    round_plan,
)
from .demo import DemoConfig, build_scene, run_demo
from .matrices import CostMatrix, load_matrix_csv, save_matrix_csv
from .probpit import probpit_loss
from .signals import Waveform, save_waveform
from .sinkhorn import AnnealSchedule, SinkhornConfig, anneal_beta, sinkhorn_iterate, sinkpit_loss

BENCH_METHODS = ("brute_force", "hungarian", "sinkpit")
SOLVE_METHODS = ("brute_force", "hungarian", "sinkpit", "probpit", "all")


class UsageError(ValueError):
    """Bad flag combination or out-of-contract request; exits with code 2."""


@dataclass(frozen=True)
class BenchRecord:
    method: str
    n: int
    trials: int
    mean_seconds: float
    std_seconds: float

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.mean_seconds > 0:
            raise ValueError(f"mean_seconds must be positive, got {self.mean_seconds}")


def _atomic_write_text(path: str, text: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="ascii") as f:
        f.write(text)
    os.replace(tmp, path)


def parse_sizes(spec: str) -> list[int]:
    """Sizes as 'lo:hi' (inclusive) or a comma list like '2,4,8'."""
    try:
        if ":" in spec:
            lo, hi = (int(v) for v in spec.split(":"))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(v) for v in spec.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse sizes {spec!r}; use 'lo:hi' or 'a,b,c'") from None


def run_benchmark(
    sizes: list[int],
    methods: list[str],
    trials: int,
    cfg: SinkhornConfig,
    rng: np.random.Generator,
) -> list[BenchRecord]:
    """Time each solver on fresh Gaussian cost matrices (sigma 10 per entry).

    Matrix generation sits outside the timed region; one warmup solve per
    (method, n) absorbs first-call overhead. Methods run sequentially so
    timings never contaminate each other.
    """
    solvers = {
        "brute_force": brute_force_pit,
        "hungarian": hungarian,
        "sinkpit": lambda c: sinkpit_loss(c, cfg),
    }
    records = []
    for method in sorted(methods):
        if method not in solvers:
            raise UsageError(f"unknown method {method!r}; choose from {BENCH_METHODS}")
        for n in sizes:
            if n < 1:
                raise UsageError(f"sizes must be positive, got {n}")
            if method == "brute_force" and n > MAX_ENUMERATION_N:
                raise UsageError(
                    f"brute_force is capped at n={MAX_ENUMERATION_N}, requested {n}"
                )
            solve = solvers[method]
            matrices = [CostMatrix(rng.normal(0.0, 10.0, (n, n))) for _ in range(trials)]
            solve(matrices[0])  # warmup
            times = []
            for c in matrices:
                t0 = time.perf_counter()
                solve(c)
                times.append(time.perf_counter() - t0)
            arr = np.array(times)
            std = float(arr.std(ddof=1)) if trials > 1 else 0.0
            records.append(BenchRecord(method, n, trials, float(arr.mean()), std))
    records.sort(key=lambda r: (r.method, r.n))
    return records


def bench_records_to_csv(records: list[BenchRecord]) -> str:
    lines = ["method,n,trials,mean_seconds,std_seconds"]
    for r in records:
        lines.append(f"{r.method},{r.n},{r.trials},{r.mean_seconds:.9e},{r.std_seconds:.9e}")
    return "\n".join(lines) + "\n"


def cmd_bench(opts: dict) -> int:
    sizes = parse_sizes(opts["sizes"])
    methods = [m.strip() for m in opts["methods"].split(",") if m.strip()]
    trials = int(opts["trials"])
    if trials < 1:
        raise UsageError(f"trials must be >= 1, got {trials}")
    cfg = SinkhornConfig(beta=float(opts["beta"]), iterations=int(opts["iterations"]))
    if opts["deterministic"] or opts["seed"] is not None:
        rng = np.random.default_rng(0 if opts["seed"] is None else int(opts["seed"]))
    else:
        rng = np.random.default_rng()
    records = run_benchmark(sizes, methods, trials, cfg, rng)
    csv_text = bench_records_to_csv(records)
    if opts["out"]:
        _atomic_write_text(opts["out"], csv_text)
    if opts["format"] == "json":
        print(json.dumps([r.__dict__ for r in records], indent=2))
    else:
        print(csv_text, end="")
    return 0


def _solve_one(method: str, c: CostMatrix, opts: dict) -> dict:
    if method in ("brute_force", "probpit") and c.n > MAX_ENUMERATION_N:
        raise UsageError(f"{method} is capped at n={MAX_ENUMERATION_N}, matrix is {c.n}x{c.n}")
    if method == "brute_force":
        r = brute_force_pit(c)
        return {"method": method, "n": c.n, "loss": r.mean_cost,
                "total_cost": r.total_cost, "permutation": list(r.permutation.mapping)}
    if method == "hungarian":
        r = hungarian(c)
        return {"method": method, "n": c.n, "loss": r.mean_cost,
                "total_cost": r.total_cost, "permutation": list(r.permutation.mapping)}
    if method == "sinkpit":
        cfg = SinkhornConfig(beta=float(opts["beta"]), iterations=int(opts["iterations"]))
        plan = sinkhorn_iterate(c, cfg).exp()
        return {
            "method": method,
            "n": c.n,
            "loss": sinkpit_loss(c, cfg),
            "beta": cfg.beta,
            "iterations": cfg.iterations,
            "marginal_deviation": plan.marginal_deviation,
            "permutation": list(round_plan(plan).mapping),
        }
    if method == "probpit":
        gamma = float(opts["gamma"])
        return {"method": method, "n": c.n, "gamma": gamma,
                "loss": probpit_loss(c, gamma)}
    raise UsageError(f"unknown method {method!r}; choose from {SOLVE_METHODS}")


def cmd_solve(opts: dict) -> int:
    c = CostMatrix(load_matrix_csv(opts["cost_csv"]))
    methods = list(SOLVE_METHODS[:-1]) if opts["method"] == "all" else [opts["method"]]
    reports = [_solve_one(m, c, opts) for m in methods]
    if len(reports) > 1:
        exact = [r for r in reports if r["method"] in ("brute_force", "hungarian")]
        agree = len({tuple(r["permutation"]) for r in reports if "permutation" in r}) == 1
        value_agree = (
            abs(exact[0]["total_cost"] - exact[1]["total_cost"]) < 1e-9
            if len(exact) == 2
            else True
        )
        summary = {"methods_agree_on_permutation": agree, "exact_totals_agree": value_agree}
    else:
        summary = None
    if opts["format"] == "json":
        out = {"reports": reports}
        if summary is not None:
            out["agreement"] = summary
        print(json.dumps(out, indent=2))
    elif opts["format"] == "csv":
        print("method,n,loss,total_cost,permutation,marginal_deviation")
        for r in reports:
            perm = " ".join(str(j) for j in r.get("permutation", []))
            print(
                f"{r['method']},{r['n']},{r['loss']:.12g},"
                f"{r.get('total_cost', '')},{perm},{r.get('marginal_deviation', '')}"
            )
    else:
        for r in reports:
            line = f"{r['method']}: loss={r['loss']:.6f}"
            if "total_cost" in r:
                line += f" total={r['total_cost']:.6f}"
            if "permutation" in r:
                line += " perm=" + " ".join(str(j) for j in r["permutation"])
            if "marginal_deviation" in r:
                line += f" marginal_dev={r['marginal_deviation']:.3e}"
            print(line)
        if summary is not None:
            print(
                f"agreement: permutations={'yes' if summary['methods_agree_on_permutation'] else 'no'}"
                f" exact_totals={'yes' if summary['exact_totals_agree'] else 'no'}"
            )
    return 0


def cmd_schedule(opts: dict) -> int:
    epochs = int(opts["epochs"])
    if epochs < 1:
        raise UsageError(f"epochs must be >= 1, got {epochs}")
    sched = AnnealSchedule(base=float(opts["base"]), cap=float(opts["cap"]))
    rows = [(e, anneal_beta(e, sched)) for e in range(epochs)]
    if opts["format"] == "json":
        print(json.dumps([{"epoch": e, "beta": b} for e, b in rows], indent=2))
    else:
        print("epoch,beta")
        for e, b in rows:
            print(f"{e},{b:.6g}")
    return 0


def cmd_demo_demix(opts: dict) -> int:
    cfg = DemoConfig(
        n=int(opts["n"]),
        seconds=float(opts["seconds"]),
        sample_rate=int(opts["sample_rate"]),
        seed=int(opts["seed"]) if opts["seed"] is not None else 0,
        epochs=int(opts["epochs"]),
        lr=float(opts["lr"]),
        iterations=int(opts["iterations"]),
        schedule=AnnealSchedule(base=float(opts["base"]), cap=float(opts["cap"])),
    )
    state, report = run_demo(cfg)
    out_dir = opts["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    save_matrix_csv(os.path.join(out_dir, "demix_matrix.csv"), state.w)
    _atomic_write_text(os.path.join(out_dir, "report.json"), json.dumps(report, indent=2) + "\n")
    if opts["save_audio"]:
        sources, _, mixtures = build_scene(cfg)  # deterministic per seed
        x = np.stack([w.samples for w in mixtures])
        estimates = state.w @ x
        audio = os.path.join(out_dir, "audio")
        os.makedirs(audio, exist_ok=True)
        peak = max(np.abs(estimates).max(), max(np.abs(w.samples).max() for w in sources))
        scale = 0.9 / peak if peak > 0 else 1.0
        for i, w in enumerate(sources):
            save_waveform(Waveform(w.samples * scale, cfg.sample_rate),
                          os.path.join(audio, f"source_{i}.wav"))
        for i, w in enumerate(mixtures):
            save_waveform(Waveform(w.samples * scale, cfg.sample_rate),
                          os.path.join(audio, f"mixture_{i}.wav"))
        for i, row in enumerate(estimates):
            save_waveform(Waveform(row * scale, cfg.sample_rate),
                          os.path.join(audio, f"estimate_{i}.wav"))
    if opts["format"] == "json":
        print(json.dumps({k: v for k, v in report.items()
                          if k not in ("loss_history", "permutation_history")}, indent=2))
    else:
        print(f"epochs={report['epochs']} beta_final={report['beta_final']:.4g}")
        print(f"loss: first={report['loss_first']:.4f} final={report['loss_final']:.4f}")
        print(f"mean SI-SDR: mixtures={report['baseline_mean_si_sdr']:.3f} dB"
              f" estimates={report['final_mean_si_sdr']:.3f} dB"
              f" improvement={report['mean_si_sdr_improvement']:.3f} dB")
        print(f"final assignment: {' '.join(str(j) for j in report['permutation_history'][-1])}")
        print(f"outputs in {out_dir}")
    return 0


_DEFAULTS = {
    "bench": {
        "sizes": "2:10", "trials": 20, "methods": ",".join(BENCH_METHODS),
        "beta": 10.0, "iterations": 200, "seed": None, "deterministic": False,
        "out": None, "format": "text",
    },
    "solve": {
        "method": "all", "beta": 10.0, "iterations": 200, "gamma": 0.1, "format": "text",
    },
    "schedule": {"epochs": 200, "base": 1.02, "cap": 10.0, "format": "text"},
    "demo-demix": {
        "n": 4, "seconds": 1.0, "sample_rate": 8000, "seed": 0, "epochs": 500,
        "lr": 2e-3, "iterations": 200, "base": 1.02, "cap": 10.0,
        "out_dir": "demo_out", "save_audio": True, "format": "text",
    },
}

_COMMANDS = {
    "bench": cmd_bench,
    "solve": cmd_solve,
    "schedule": cmd_schedule,
    "demo-demix": cmd_demo_demix,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sinkpit",
        description="Permutation-invariant assignment losses: exact, Sinkhorn-relaxed, probabilistic.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="JSON file of defaults mirroring the long flag names")
        sp.add_argument("--format", choices=("text", "csv", "json"), default=None,
                        help="report format (default text)")

    b = sub.add_parser("bench", help="time the solvers over a range of matrix sizes")
    b.add_argument("--sizes", default=None, help="'lo:hi' inclusive or comma list (default 2:10)")
    b.add_argument("--trials", type=int, default=None, help="repetitions per size (default 20)")
    b.add_argument("--methods", default=None,
                   help=f"comma list from {','.join(BENCH_METHODS)} (default all)")
    b.add_argument("--beta", type=float, default=None, help="inverse temperature (default 10)")
    b.add_argument("--iterations", type=int, default=None, help="Sinkhorn sweeps (default 200)")
    b.add_argument("--seed", type=int, default=None, help="seed for matrix generation")
    b.add_argument("--deterministic", action="store_true", default=None,
                   help="seeded matrix generation (seed 0 unless --seed)")
    b.add_argument("--out", default=None, help="CSV output path")
    add_common(b)

    s = sub.add_parser("solve", help="solve one stored cost matrix")
    s.add_argument("cost_csv", help="headerless CSV of the square cost matrix")
    s.add_argument("--method", choices=SOLVE_METHODS, default=None,
                   help="solver to run (default all)")
    s.add_argument("--beta", type=float, default=None)
    s.add_argument("--iterations", type=int, default=None)
    s.add_argument("--gamma", type=float, default=None, help="probpit temperature (default 0.1)")
    add_common(s)

    c = sub.add_parser("schedule", help="print the beta cooling table")
    c.add_argument("--epochs", type=int, default=None, help="rows to print (default 200)")
    c.add_argument("--base", type=float, default=None, help="geometric base (default 1.02)")
    c.add_argument("--cap", type=float, default=None, help="beta ceiling (default 10)")
    add_common(c)

    d = sub.add_parser("demo-demix", help="train the toy linear demixer")
    d.add_argument("--n", type=int, default=None, help="number of sources, <= 8 (default 4)")
    d.add_argument("--seconds", type=float, default=None)
    d.add_argument("--sample-rate", dest="sample_rate", type=int, default=None)
    d.add_argument("--seed", type=int, default=None)
    d.add_argument("--epochs", type=int, default=None)
    d.add_argument("--lr", type=float, default=None)
    d.add_argument("--iterations", type=int, default=None)
    d.add_argument("--base", type=float, default=None, help="anneal base (default 1.02)")
    d.add_argument("--cap", type=float, default=None, help="anneal cap (default 10)")
    d.add_argument("--out-dir", dest="out_dir", default=None)
    d.add_argument("--no-audio", dest="save_audio", action="store_false", default=None,
                   help="skip writing WAV files")
    add_common(d)
    return p


def _resolve_options(args: argparse.Namespace) -> dict:
    opts = dict(_DEFAULTS[args.command])
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as f:
            try:
                loaded = json.load(f)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{config_path}: invalid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ValueError(f"{config_path}: config must be a JSON object")
        unknown = set(loaded) - set(opts)
        if unknown:
            raise UsageError(f"{config_path}: unknown keys for {args.command}: {sorted(unknown)}")
        opts.update(loaded)
    for key in opts:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    for key, value in vars(args).items():
        if key not in opts and key not in ("command", "config") and value is not None:
            opts[key] = value  # positionals such as cost_csv
    return opts


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = _resolve_options(args)
        return _COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ArithmeticError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
