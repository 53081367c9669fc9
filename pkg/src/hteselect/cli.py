"""Command-line entry point: ``hteselect {score,simulate,replay,bench}``.

Exit codes: 0 success, 1 usage error, 2 data validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bandits import make_policy, replay_evaluate
from .bench import POLICIES, BenchConfig, run_benchmark
from .binning import BinConfig
from .data import DataValidationError, Schema, ingest_csv, write_csv
from .scoring import HIE_OFFSETS, CombineConfig, score_all_features, write_reports_csv, write_reports_json
from .synth import GeneratorConfig, generate, write_ground_truth

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _add_bin_args(p):
    p.add_argument("--m-x", type=int, default=10, help="bins per continuous feature")
    p.add_argument("--max-categories", type=int, default=20)
    p.add_argument("--min-arm-samples", type=int, default=10)


def _add_combine_args(p):
    p.add_argument("--alpha1", type=float, default=0.5, help="weight of normalized HIE")
    p.add_argument("--alpha2", type=float, default=0.5, help="weight of normalized HDD")
    p.add_argument("--kl-clamp", type=float, default=1e-6)
    p.add_argument("--hie-offset", choices=HIE_OFFSETS, default="global")


def _add_generator_args(p):
    g = GeneratorConfig()
    p.add_argument("--n", type=int, default=g.n)
    p.add_argument("--k", type=int, default=g.k)
    p.add_argument("--d-hte", type=int, default=g.d_hte)
    p.add_argument("--d-corr", type=int, default=g.d_corr)
    p.add_argument("--d-irrel", type=int, default=g.d_irrel)
    p.add_argument("--effect", type=float, default=g.effect)
    p.add_argument("--corr-effect", type=float, default=g.corr_effect)
    p.add_argument("--base", type=float, default=g.base)


def _add_shared(p):
    p.add_argument("--config", type=Path, help="flat JSON object of flag values; explicit flags win")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", type=Path, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hteselect", description="Causal feature selection for contextual bandits.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", help="rank the features of a logged-bandit CSV")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--csv", type=Path, help="also write the reports as CSV")
    p.add_argument("--k", type=int, help="arm count (default: max arm id + 1)")
    p.add_argument("--workers", type=int, default=1)
    _add_bin_args(p)
    _add_combine_args(p)
    _add_shared(p)

    p = sub.add_parser("simulate", help="write a synthetic log and its ground truth")
    _add_generator_args(p)
    p.add_argument("--truth", type=Path, help="ground-truth JSON path (default: <output>.truth.json)")
    _add_shared(p)

    p = sub.add_parser("replay", help="offline replay evaluation of one policy")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--policy", choices=POLICIES, required=True)
    p.add_argument("--feature", action="append", required=True, help="repeat for a feature subset")
    p.add_argument("--alpha-ucb", type=float, default=1.0)
    p.add_argument("--k", type=int, help="arm count (default: max arm id + 1)")
    p.add_argument("--timing", action="store_true", help="include wall-clock duration in the output")
    _add_bin_args(p)
    _add_shared(p)

    p = sub.add_parser("bench", help="synthetic benchmark with timing table")
    _add_generator_args(p)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--policies", default=",".join(POLICIES), help="comma-separated subset of " + ",".join(POLICIES))
    p.add_argument("--alpha-ucb", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    _add_bin_args(p)
    _add_combine_args(p)
    _add_shared(p)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    """Parse ``argv``, taking defaults from ``--config`` when given."""
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    subparsers = parser._subparsers._group_actions[0].choices
    if known.config is None or known.command not in subparsers:
        return parser.parse_args(argv)

    try:
        cfg = json.loads(known.config.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        parser.error(f"cannot read config {known.config}: {e}")
    if not isinstance(cfg, dict):
        parser.error("config file must hold a flat JSON object")
    sub = subparsers[known.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            parser.error(f"unknown config key {key!r} for {known.command}")
        if actions[dest].type is Path and value is not None:
            value = Path(value)
        defaults[dest] = value
        actions[dest].required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _bin_config(args) -> BinConfig:
    return BinConfig(args.m_x, args.max_categories, args.min_arm_samples)


def _combine_config(args) -> CombineConfig:
    return CombineConfig(args.alpha1, args.alpha2, args.kl_clamp, args.hie_offset)


def _generator_config(args) -> GeneratorConfig:
    return GeneratorConfig(
        n=args.n, k=args.k, d_hte=args.d_hte, d_corr=args.d_corr, d_irrel=args.d_irrel,
        effect=args.effect, corr_effect=args.corr_effect, base=args.base, seed=args.seed,
    )


def _configs(build, args):
    try:
        return build(args)
    except (ValueError, TypeError) as e:
        raise UsageError(str(e)) from e


def print_table(reports, limit=10, out=None):
    out = out or sys.stdout
    print(f"{'rank':>4}  {'feature':<20} {'hie':>10} {'hdd':>10} {'combined':>9}  flags", file=out)
    for i, r in enumerate(reports[:limit], start=1):
        print(f"{i:>4}  {r.feature:<20} {r.hie:>10.5f} {r.hdd:>10.5f} {r.combined:>9.4f}  {','.join(r.flags)}", file=out)


def run_score(args) -> int:
    bins, comb = _configs(_bin_config, args), _configs(_combine_config, args)
    log = ingest_csv(args.input, Schema(k=args.k))
    reports = score_all_features(log, bins, comb, workers=args.workers)
    write_reports_json(reports, args.output)
    if args.csv:
        write_reports_csv(reports, args.csv)
    print_table(reports)
    return EXIT_OK


def run_simulate(args) -> int:
    gen = _configs(_generator_config, args)
    log, truth = generate(gen)
    write_csv(log, args.output)
    truth_path = args.truth or args.output.with_suffix(".truth.json")
    write_ground_truth(truth, gen, truth_path)
    print(f"wrote {log.N} events to {args.output} and ground truth to {truth_path}")
    return EXIT_OK


def run_replay(args) -> int:
    bins = _configs(_bin_config, args)
    if args.alpha_ucb < 0:
        raise UsageError("--alpha-ucb must be non-negative")
    log = ingest_csv(args.input, Schema(k=args.k))
    unknown = [f for f in args.feature if f not in log.feature_names]
    if unknown:
        raise DataValidationError(f"unknown feature(s): {', '.join(unknown)}")
    policy = make_policy(args.policy, log.k, args.alpha_ucb, args.seed, bins)
    result = replay_evaluate(log, policy, args.feature)
    args.output.write_text(json.dumps(result.to_dict(timing=args.timing), indent=2) + "\n", encoding="utf-8")
    print(
        f"{result.policy} on {','.join(result.features)}: matched {result.matched_count}/{log.N}, "
        f"average reward {result.average_reward:.5f}"
    )
    return EXIT_OK


def _bench_config(args) -> BenchConfig:
    policies = tuple(p.strip() for p in args.policies.split(",") if p.strip())
    return BenchConfig(
        generator=_generator_config(args), trials=args.trials, policies=policies, alpha_ucb=args.alpha_ucb,
        bin_config=_bin_config(args), combine_config=_combine_config(args), seed=args.seed, workers=args.workers,
    )


def run_bench(args) -> int:
    config = _configs(_bench_config, args)
    result = run_benchmark(config)
    paths = result.write(args.output)
    report = result.timing()
    print(f"{'method':<12} {'seconds/trial':>14} {'x scoring':>10}")
    print(f"{'hie+hdd':<12} {report.seconds['scoring']:>14.3f} {1.0:>10.1f}")
    for p in config.policies:
        print(f"{p:<12} {report.seconds[p]:>14.3f} {report.speedup[p]:>10.1f}")
    for cls, m in result.class_means().items():
        print(f"{cls:<14} combined={m['combined']:.4f} hie={m['hie']:.5f} hdd={m['hdd']:.5f}")
    print("wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


COMMANDS = {"score": run_score, "simulate": run_simulate, "replay": run_replay, "bench": run_bench}


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"hteselect: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataValidationError, FileNotFoundError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"hteselect: {msg}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001
        print(f"hteselect: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
