"""Command-line surface: training sweeps, comparison summaries, scatter
projection, the grid-search oracle, and the gradient-check suite.

CSV schema (fixed):
    algorithm,seed,episode,mean_reward,mean_sr_sum,mean_see_sum,expert_0,expert_1,expert_2
Numeric fields use shortest round-trip decimal formatting; files are UTF-8
with LF line endings.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import ConfigError, RunConfig, dump_config, load_config, parse_config
from .oracle import frozen_channel, grid_search, policy_gap
from .trainer import RunRecord, TrainingDiverged, train

CSV_COLUMNS = (
    "algorithm", "seed", "episode", "mean_reward", "mean_sr_sum",
    "mean_see_sum", "expert_0", "expert_1", "expert_2",
)


def _fmt(x: float) -> str:
    return repr(float(x))


def record_row(r: RunRecord) -> str:
    return ",".join(
        [
            r.algorithm,
            str(r.seed),
            str(r.episode),
            _fmt(r.mean_reward),
            _fmt(r.mean_sr_sum),
            _fmt(r.mean_see_sum),
            str(r.expert_counts[0]),
            str(r.expert_counts[1]),
            str(r.expert_counts[2]),
        ]
    )


def write_records_csv(path: str, records: list[RunRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(CSV_COLUMNS) + "\n")
        for r in records:
            f.write(record_row(r) + "\n")


def read_csv(path: str) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty CSV")
        for col in CSV_COLUMNS:
            if col not in reader.fieldnames:
                raise ValueError(f"{path}: missing column {col!r}")
        return list(reader)


def run_single(algorithm: str, seed: int, cfg_text: str, out_dir: str) -> dict:
    """One (algorithm, seed) training run; writes its CSV and checkpoint.

    Top-level so a process pool can pickle it. Returns a status dict.
    """
    cfg = parse_config(cfg_text)
    tcfg = dataclasses.replace(cfg.training, seed=seed)
    csv_path = os.path.join(out_dir, f"{algorithm}_seed{seed}.csv")
    ckpt_path = os.path.join(out_dir, f"{algorithm}_seed{seed}.json")
    status = {"algorithm": algorithm, "seed": seed, "csv": csv_path}
    try:
        records, checkpoint, diag = train(
            algorithm,
            tcfg,
            cfg.scenario,
            reward_weight=cfg.reward_weight,
            freeze_channel=cfg.freeze_channel,
        )
    except TrainingDiverged as e:
        write_records_csv(csv_path, e.records)
        status.update(ok=False, error=str(e))
        return status
    write_records_csv(csv_path, records)
    with open(ckpt_path, "w", encoding="utf-8") as f:
        json.dump(checkpoint, f)
    status.update(ok=True, checkpoint=ckpt_path, **diag)
    return status


def cmd_train(args) -> int:
    cfg = _load(args)
    algos = args.algos.split(",") if args.algos else list(cfg.algorithms)
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else list(cfg.seeds)
    out_dir = args.out or cfg.out_dir
    workers = args.workers or cfg.workers
    if args.freeze_channel:
        cfg.freeze_channel = True
    os.makedirs(out_dir, exist_ok=True)
    cfg_text = dump_config(cfg)

    jobs = [(a, s) for a in algos for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(run_single, a, s, cfg_text, out_dir) for a, s in jobs
            ]
            statuses = [f.result() for f in futures]
    else:
        statuses = [run_single(a, s, cfg_text, out_dir) for a, s in jobs]

    merged: list[str] = []
    for a, s in sorted(jobs):
        path = os.path.join(out_dir, f"{a}_seed{s}.csv")
        with open(path, encoding="utf-8") as f:
            merged.extend(f.read().splitlines()[1:])
    merged_path = os.path.join(out_dir, "merged.csv")
    with open(merged_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(CSV_COLUMNS) + "\n")
        for line in merged:
            f.write(line + "\n")

    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w", encoding="utf-8") as f:
        json.dump(statuses, f, indent=2)

    ok = all(st["ok"] for st in statuses)
    for st in statuses:
        mark = "done" if st["ok"] else f"FAILED: {st['error']}"
        print(f"{st['algorithm']} seed {st['seed']}: {mark}")
    print(f"merged CSV: {merged_path}")
    return 0 if ok else 1


def compare_table(rows: list[dict], final_fraction: float = 0.1) -> dict:
    """Per algorithm: mean reward over the last `final_fraction` of each
    seed's episodes (averaged over seeds) and the max episode reward."""
    by_algo: dict[str, dict[int, list[tuple[int, float]]]] = {}
    for row in rows:
        algo, seed = row["algorithm"], int(row["seed"])
        by_algo.setdefault(algo, {}).setdefault(seed, []).append(
            (int(row["episode"]), float(row["mean_reward"]))
        )
    out = {}
    for algo, seeds in by_algo.items():
        finals, peak = [], -np.inf
        for _, eps in sorted(seeds.items()):
            eps.sort()
            vals = [v for _, v in eps]
            n_tail = max(1, int(round(len(vals) * final_fraction)))
            finals.append(float(np.mean(vals[-n_tail:])))
            peak = max(peak, max(vals))
        out[algo] = {"final_mean": float(np.mean(finals)), "max": float(peak)}
    return out


def cmd_compare(args) -> int:
    try:
        rows = read_csv(args.csv)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    table = compare_table(rows)
    print(f"{'algorithm':<10} {'final_mean':>12} {'max':>12}")
    for algo in sorted(table):
        t = table[algo]
        print(f"{algo:<10} {t['final_mean']:>12.4f} {t['max']:>12.4f}")
    algos = sorted(table, key=lambda a: -table[a]["final_mean"])
    for hi, lo in zip(algos, algos[1:]):
        print(f"verdict: {hi} > {lo}")
    return 0


def cmd_scatter(args) -> int:
    try:
        rows = read_csv(args.csv)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    lines = ["algorithm,mean_sr_sum,mean_see_sum"]
    for row in rows:
        lines.append(f"{row['algorithm']},{row['mean_sr_sum']},{row['mean_see_sum']}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_oracle(args) -> int:
    cfg = _load(args)
    ch = frozen_channel(cfg.scenario, args.seed)
    result = grid_search(
        ch, cfg.scenario, resolution=args.resolution, weight=cfg.reward_weight
    )
    out = {
        "best_allocation": result.best_allocation.tolist(),
        "best_reward": result.best_reward,
        "grid_resolution": result.grid_resolution,
        "evaluations": result.evaluations,
    }
    if args.checkpoint:
        with open(args.checkpoint, encoding="utf-8") as f:
            ckpt = json.load(f)
        gap = policy_gap(
            ckpt["actor"], ch, cfg.scenario,
            weight=cfg.reward_weight, resolution=args.resolution,
        )
        out["policy_mean_reward"] = gap.mean_reward
        out["policy_gap"] = gap.ratio if not gap.degenerate else "degenerate scenario"
    print(json.dumps(out))
    return 0


def cmd_gradcheck(args) -> int:
    from .gradcheck import run_suite

    errs = run_suite(draws=args.draws, verbose=args.verbose)
    net_keys = ("critic", "denoiser", "gate", "ddpg_actor", "critic_loss",
                "ddpg_actor_loss", "gate_loss")
    ok = True
    for k, v in errs.items():
        tol = 1e-3 if k == "diffusion_chain" else 1e-4
        status = "ok" if v <= tol else "FAIL"
        if v > tol:
            ok = False
        print(f"{k:<18} max rel err {v:.3e}  (tol {tol:.0e})  {status}")
    return 0 if ok else 1


def _load(args) -> RunConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return parse_config("")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="secjam",
        description="Friendly-jamming secrecy optimization workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a training sweep")
    p.add_argument("--config", help="INI-style run configuration")
    p.add_argument("--algos", help="comma list, default from config")
    p.add_argument("--seeds", help="comma list, default from config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--freeze-channel", action="store_true")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("compare", help="summarize a merged CSV")
    p.add_argument("--csv", required=True)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("scatter", help="project SR-vs-EE columns")
    p.add_argument("--csv", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_scatter)

    p = sub.add_parser("oracle", help="grid-search the frozen channel")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--resolution", type=int, default=21)
    p.add_argument("--checkpoint", help="agent checkpoint for policy_gap")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p.add_argument("--draws", type=int, default=10)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_gradcheck)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
