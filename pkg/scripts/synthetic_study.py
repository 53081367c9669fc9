"""Full synthetic study: 10 trials x 50k events x 3 arms, every feature replayed under every policy.

    python scripts/synthetic_study.py --output results/study.json --workers 4

Prints mean scores and replay rewards per feature class, the per-trial rank
separation, and the timing table. Takes several minutes single-process.
"""

import argparse
from pathlib import Path

import numpy as np

from hteselect.bench import POLICIES, BenchConfig, run_benchmark
from hteselect.synth import HTE, GeneratorConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--n", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--policies", default=",".join(POLICIES))
    ap.add_argument("--output", type=Path, default=Path("results/study.json"))
    args = ap.parse_args()

    config = BenchConfig(
        generator=GeneratorConfig(n=args.n),
        trials=args.trials,
        policies=tuple(args.policies.split(",")),
        seed=args.seed,
        workers=args.workers,
    )
    result = run_benchmark(config)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    result.write(args.output)

    reward_cols = [f"reward_{p}" for p in config.policies]
    print(f"{'class':<14}{'hie':>9}{'hdd':>9}{'combined':>10}" + "".join(f"{c:>18}" for c in reward_cols))
    for cls, m in result.class_means().items():
        print(f"{cls:<14}{m['hie']:>9.4f}{m['hdd']:>9.4f}{m['combined']:>10.4f}" + "".join(f"{m[c]:>18.4f}" for c in reward_cols))
    print(f"context-free global winner reward: {np.mean([t.baseline_reward for t in result.trials]):.4f}")

    for t in result.trials:
        combined = {s["feature"]: s["combined"] for s in t.scores}
        hte = [f for f, c in t.labels.items() if c == HTE]
        ok = min(combined[f] for f in hte) > max(v for f, v in combined.items() if f not in hte)
        print(f"trial {t.trial}: {' '.join(t.ranking())}  separated={ok}")

    report = result.timing()
    print("\nseconds per trial")
    for method, secs in report.seconds.items():
        ratio = report.speedup.get(method, 1.0)
        print(f"  {method:<10}{secs:>10.2f}  ({ratio:.0f}x scoring)")


if __name__ == "__main__":
    main()
