#!/usr/bin/env python3
"""Retrieval reproduction and ablation ladder on the synthetic corpus.

For each seed: build the corpus, fit DocNADE, score the unsupervised SumEMB (E) and
DocNADE (T) baselines, then train the ml, cl and full variants of the Siamese model
and evaluate them on the held-out queries. Prints one row per (seed, system) and the
per-system medians; ``--json`` writes every number.

    python3 scripts/reproduce.py --seeds 1 2 3 --epochs 15
"""

from __future__ import annotations

import argparse
import json
import statistics
import time

from asymsim.config import DocNadeConfig, ModelConfig, SyntheticConfig, TrainConfig
from asymsim.pipeline import baselines, evaluate, prepare, train_variant


def run_seed(seed: int, epochs: int, learn_weights: bool, variants) -> dict:
    exp = prepare(SyntheticConfig(seed=seed), DocNadeConfig(), seed)
    model_cfg = ModelConfig()
    rows = {f"baseline-{ch}": m for ch, m in baselines(exp, model_cfg, seed).items()}
    for variant in variants:
        t0 = time.perf_counter()
        res = train_variant(exp, variant, model_cfg,
                            TrainConfig(epochs=epochs, seed=seed, learn_weights=learn_weights))
        row = evaluate(exp, res.model).to_dict()
        row["best_dev_mse"] = min(h.dev_mse for h in res.history)
        row["seconds"] = time.perf_counter() - t0
        rows[variant] = row
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--epochs", type=int, default=15)
    ap.add_argument("--variants", nargs="+", default=["ml", "cl", "full"])
    ap.add_argument("--fixed-weights", action="store_true",
                    help="keep W and V at their initial values instead of learning them")
    ap.add_argument("--json")
    args = ap.parse_args()

    results = {}
    print(f"{'seed':>4}  {'system':<12}{'acc@10':>8}{'mrr@10':>8}{'map@10':>8}{'dev mse':>9}")
    for seed in args.seeds:
        results[seed] = run_seed(seed, args.epochs, not args.fixed_weights, args.variants)
        for name, row in results[seed].items():
            mse = row.get("best_dev_mse")
            mse_s = f"{mse:9.4f}" if mse is not None else f"{'':>9}"
            print(f"{seed:>4}  {name:<12}{row['acc@10']:8.3f}{row['mrr@10']:8.3f}"
                  f"{row['map@10']:8.3f}{mse_s}", flush=True)
    print("medians")
    for name in next(iter(results.values())):
        acc = statistics.median(results[s][name]["acc@10"] for s in args.seeds)
        line = f"  {name:<12} acc@10 {acc:.3f}"
        if "best_dev_mse" in results[args.seeds[0]][name]:
            mse = statistics.median(results[s][name]["best_dev_mse"] for s in args.seeds)
            line += f"  dev mse {mse:.4f}"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
