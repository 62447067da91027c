"""Precompute the 2000-trial acceptance sweeps into the cache directory.

The full NMSE sweeps behind the figure-reproduction criteria take tens
of CPU-hours on one core, so this tool runs them in resumable shards of
trials.  Shards are keyed by (snr, Q, first-trial), letting the pilot
sweep reuse the SNR sweep's shared (15 dB, Q=15) point, and the final
CSVs are assembled with the same aggregation code the live sweep uses,
so the cached artifact matches what ``sweep_snr`` / ``sweep_pilot_length``
would produce.

Usage: python tools/warm_acceptance_cache.py [cache_dir]
"""

import dataclasses
import hashlib
import json
import os
import sys
import time

from threadpoolctl import threadpool_limits

from nfse.harness import (
    ExperimentConfig,
    SweepResult,
    aggregate_point,
    context_for,
    run_trial,
)

TRIALS = 2000
SHARD = 200
SNR_POINTS = (-10.0, 0.0, 10.0, 15.0, 20.0, 30.0)
PILOT_POINTS = (6, 15, 30)
PILOT_SNR = 15.0
# Criteria-critical points first so margins can be inspected early.
WORK_ORDER = [
    (30.0, 15),
    (15.0, 15),
    (15.0, 30),
    (15.0, 6),
    (20.0, 15),
    (10.0, 15),
    (0.0, 15),
    (-10.0, 15),
]


def snr_config() -> ExperimentConfig:
    return dataclasses.replace(ExperimentConfig(), trials=TRIALS, snr_db=SNR_POINTS)


def pilot_config() -> ExperimentConfig:
    return dataclasses.replace(
        ExperimentConfig(), trials=TRIALS, pilot_lengths=PILOT_POINTS, pilot_snr_db=PILOT_SNR
    )


def cache_path(cache_dir: str, kind: str, cfg: ExperimentConfig) -> str:
    key = hashlib.sha256(f"{kind}|{cfg!r}".encode()).hexdigest()[:16]
    return os.path.join(cache_dir, f"{kind}-{key}.csv")


def shard_path(cache_dir: str, snr_db: float, q: int, start: int) -> str:
    return os.path.join(cache_dir, "shards", f"snr{snr_db:g}-q{q}-t{start}.json")


def run_shards(cfg: ExperimentConfig, cache_dir: str) -> None:
    ctx = context_for(cfg)
    for snr_db, q in WORK_ORDER:
        for start in range(0, TRIALS, SHARD):
            path = shard_path(cache_dir, snr_db, q, start)
            if os.path.exists(path):
                continue
            t0 = time.time()
            per_alg: dict[str, list] = {a: [] for a in sorted(cfg.algorithms)}
            for t in range(start, start + SHARD):
                out = run_trial(cfg, snr_db, q, t, context=ctx)
                for a, v in out.items():
                    per_alg[a].append(v)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path + ".tmp", "w") as f:
                json.dump(per_alg, f)
            os.replace(path + ".tmp", path)
            print(
                f"shard snr={snr_db:g} q={q} trials {start}..{start + SHARD - 1} "
                f"done in {time.time() - t0:.0f}s",
                flush=True,
            )


def load_point(cache_dir: str, snr_db: float, q: int, algorithms) -> dict[str, list]:
    per_alg: dict[str, list] = {a: [] for a in algorithms}
    for start in range(0, TRIALS, SHARD):
        with open(shard_path(cache_dir, snr_db, q, start)) as f:
            shard = json.load(f)
        for a in algorithms:
            per_alg[a].extend(shard[a])
    return per_alg


def assemble(cache_dir: str) -> None:
    for kind, cfg, points in (
        ("snr", snr_config(), [(s, 15) for s in sorted(SNR_POINTS)]),
        ("pilot", pilot_config(), [(PILOT_SNR, q) for q in sorted(PILOT_POINTS)]),
    ):
        algorithms = sorted(cfg.algorithms)
        rows = []
        for snr_db, q in points:
            per_alg = load_point(cache_dir, snr_db, q, algorithms)
            value = float(snr_db) if kind == "snr" else float(q)
            for a in algorithms:
                rows.append(aggregate_point(kind, value, a, per_alg[a]))
        out = cache_path(cache_dir, kind, cfg)
        SweepResult(rows=tuple(rows)).write_csv(out)
        print(f"wrote {out}")


def main() -> None:
    cache_dir = sys.argv[1] if len(sys.argv) > 1 else ".acceptance_cache"
    os.makedirs(cache_dir, exist_ok=True)
    with threadpool_limits(limits=1):
        run_shards(snr_config(), cache_dir)
    assemble(cache_dir)


if __name__ == "__main__":
    main()
