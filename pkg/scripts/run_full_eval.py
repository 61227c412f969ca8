#!/usr/bin/env python3
"""Build the default synthetic corpus and sweep FAR/FRR, printing the EER.

Usage: python scripts/run_full_eval.py [out_dir] [--seed N] [--users N]
Writes the corpus under out_dir (default ./eval_run) and the report next
to it. Roughly 30 s on commodity hardware.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from sigver import evaluate, synth
from sigver.config import SystemConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", nargs="?", default="eval_run")
    parser.add_argument("--seed", type=int, default=20060102)
    parser.add_argument("--users", type=int, default=50)
    parser.add_argument("--jitter", type=float, default=synth.DEFAULT_JITTER)
    parser.add_argument("--warp", type=float, default=synth.DEFAULT_WARP)
    args = parser.parse_args()

    out = Path(args.out_dir)
    corpus = out / "corpus"
    t0 = time.monotonic()
    synth.gen_corpus(
        corpus,
        n_users=args.users,
        genuines_per_user=15,
        forgeries_per_user=10,
        master_seed=args.seed,
        genuine_jitter=args.jitter,
        forgery_warp=args.warp,
    )
    print(f"corpus written to {corpus} ({time.monotonic() - t0:.1f}s)")

    t0 = time.monotonic()
    report = evaluate.eval_corpus(corpus)
    elapsed = time.monotonic() - t0
    threshold = SystemConfig().accept_threshold
    far, frr = evaluate.rates_at(report, threshold)

    print(f"evaluated {report.n_genuine} genuine + {report.n_impostor} impostor trials "
          f"in {elapsed:.1f}s")
    print(f"EER {report.eer:.4f} at threshold {report.eer_threshold:.4f}")
    print(f"shipped threshold {threshold}: FAR {far:.4f}, FRR {frr:.4f}")

    report_path = out / "report.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True))
    print(f"report written to {report_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
