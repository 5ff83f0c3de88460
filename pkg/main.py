"""
Command line entry point for the malaria policy explorer.

  explore   -c CONFIG [-o DIR]           run an experiment, write runs.jsonl, surface.csv, top_policies.txt
  surface   -r RUNS -o FILE              regress a runs log onto a grid and export plot data
  top       -r RUNS -k K                 print the top-K policy table and per-batch statistics
  simulate  -c SCENARIO --policy I,R --seed N   one policy against its baseline
  compare   -r RUNS [RUNS ...] -k K      top-K blocks of several agents side by side

Exit status: 0 ok, 2 configuration error, 3 nothing to regress,
4 batch aborted or external simulator failure, 1 anything else.
"""

import argparse
import asyncio
import logging
import sys
import traceback
from pathlib import Path
from typing import Dict, List, Optional

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from models.config import ExperimentConfig, ExternalAdapterConfig, GPConfig, default_reference_policies
from models.models import CostParams, GridSpec, Policy, ScenarioParams, SimSeed
from src.explorer.workflows import (
    fit_records,
    format_report,
    reference_posteriors,
    run_experiment,
    top_policies,
    write_outputs,
)
from tools.data_tools import (
    compare_blocks,
    surface_frame,
    top_table,
    write_surface_csv,
)
from tools.policy_space import discretize
from tools.results_store import ResultsStore, load_resolved_config, load_runs, write_resolved_config
from tools.reward_model import RewardTracker, cost_per_daly_averted, intervention_cost, summarize_outcome
from tools.sim_env import build_simulator
from utils.config import load_config, load_model, validate_model
from utils.errors import (
    BatchAbortedError,
    ConfigurationError,
    EmptyRunsError,
    ExplorerError,
    ExternalSimError,
    NonPositiveAverted,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_EMPTY = 3
EXIT_ABORTED = 4

DECISION_LOG = "agent_decisions.log"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def _decision_log(output_dir: Path) -> logging.Handler:
    output_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(output_dir / DECISION_LOG, mode="w", encoding="utf-8")
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.getLogger().addHandler(handler)
    return handler


def _gp_from_args(args: argparse.Namespace) -> GPConfig:
    defaults = GPConfig()
    return validate_model(
        GPConfig,
        {
            "lengthscale": args.lengthscale if args.lengthscale is not None else defaults.lengthscale,
            "signal_variance": (
                args.signal_variance if args.signal_variance is not None else defaults.signal_variance
            ),
            "noise_variance": args.noise if args.noise is not None else defaults.noise_variance,
        },
        source="GP options",
    )


def _grid_from_args(args: argparse.Namespace) -> GridSpec:
    return validate_model(
        GridSpec,
        {"resolution_itn": args.resolution, "resolution_irs": args.resolution},
        source="grid options",
    )


def _parse_policy(text: str) -> Policy:
    try:
        itn, irs = (float(part) for part in text.split(","))
    except ValueError as e:
        raise ConfigurationError(f"--policy must be ITN,IRS fractions, got {text!r}", fields=["policy"]) from e
    return validate_model(Policy, {"a_itn": itn, "a_irs": irs}, source="--policy")


def cmd_explore(args: argparse.Namespace) -> int:
    config = load_model(ExperimentConfig, args.config)
    if args.output is not None:
        config = config.model_copy(update={"output_dir": str(args.output)})
    if args.workers is not None:
        config = config.model_copy(update={"workers": args.workers})
    output_dir = config.output_path

    handler = _decision_log(output_dir) if args.verbose else None
    try:
        print("\n" + "=" * 70)
        print(f"  Policy exploration: {config.agent.kind}, {config.iterations} x {config.batch_size}")
        print("=" * 70)
        write_resolved_config(config, output_dir)
        with ResultsStore(output_dir, store_sqlite=config.store_sqlite) as store:
            result = asyncio.run(run_experiment(config, store=store))
        paths = write_outputs(result, output_dir)
    finally:
        if handler is not None:
            logging.getLogger().removeHandler(handler)
            handler.close()

    summary = result.progress.get_summary()
    print("\n" + "=" * 70)
    print("  Experiment Results")
    print("=" * 70)
    print(f"  Evaluated: {summary['counts']['evaluated']}/{summary['planned']}")
    print(f"  Failed: {summary['counts']['failed']}")
    print(f"  Penalised (no DALYs averted): {summary['counts']['penalized']}")
    print()
    print(top_table(result.top))
    print(f"\n  [OK] Wrote {store.runs_path}, {paths['surface']}, {paths['top']}")
    return EXIT_OK


def cmd_surface(args: argparse.Namespace) -> int:
    records = load_runs(args.runs)
    model = fit_records(records, _gp_from_args(args))
    df = surface_frame(model, discretize(_grid_from_args(args)))
    path = write_surface_csv(df, args.output)
    print(f"  [OK] Surface of {len(df)} grid points from {sum(r.ok for r in records)} records → {path}")
    return EXIT_OK


def _ranked(records, args: argparse.Namespace):
    gp = _gp_from_args(args)
    model = fit_records(records, gp)
    return model, top_policies(records, model, discretize(_grid_from_args(args)), args.k, gp.lengthscale)


def cmd_top(args: argparse.Namespace) -> int:
    records = load_runs(args.runs)
    model, tops = _ranked(records, args)
    agent = next((r.agent for r in records if r.agent), "runs")
    resolved = load_resolved_config(args.runs)
    references = resolved.reference_policies if resolved is not None else default_reference_policies()
    print(format_report(tops, reference_posteriors(model, references), records, agent), end="")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    blocks: Dict[str, list] = {}
    for path in args.runs:
        records = load_runs(path)
        _, tops = _ranked(records, args)
        name = next((r.agent for r in records if r.agent), Path(path).stem)
        if name in blocks:
            name = f"{name} ({path})"
        blocks[name] = tops
    print(compare_blocks(blocks))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    document = load_config(args.config)
    if "command" in document:
        simulator = build_simulator(None, validate_model(ExternalAdapterConfig, document, source=str(args.config)))
    else:
        simulator = build_simulator(validate_model(ScenarioParams, document, source=str(args.config)), None)
    policy = _parse_policy(args.policy)
    seed = validate_model(SimSeed, {"scenario_seed": args.seed}, source="--seed")
    costs = CostParams()

    intervention = summarize_outcome(simulator.simulate(policy, seed), costs)
    baseline = summarize_outcome(simulator.baseline(seed), costs)
    report = RewardTracker().score(policy, intervention, baseline, costs)

    print(f"\n[Simulate] policy {policy.label()} seed {args.seed} stream {seed.stream_seed(policy)}")
    print(f"  Baseline:     DALY {baseline.daly:.6g}  HSC {baseline.hsc_usd:.6g} USD  "
          f"episodes {baseline.episodes}  deaths {baseline.deaths}")
    print(f"  Intervention: DALY {intervention.daly:.6g}  HSC {intervention.hsc_usd:.6g} USD  "
          f"episodes {intervention.episodes}  deaths {intervention.deaths}")
    try:
        cost_per_daly_averted(intervention, baseline, intervention_cost(policy, intervention.population_size, costs))
    except NonPositiveAverted as e:
        print(f"  [WARN] NonPositiveAverted: {e}")
    print(report.model_dump_json(indent=2))
    return EXIT_OK


def _add_gp_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lengthscale", type=float, default=None, help="Matern-5/2 lengthscale (default 0.15)")
    parser.add_argument("--noise", type=float, default=None, help="Noise variance, standardised units (default 0.01)")
    parser.add_argument("--signal-variance", type=float, default=None, help="Kernel signal variance (default 1.0)")
    parser.add_argument("--resolution", type=int, default=100, help="Grid levels per axis (default 100)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="Debug logging, including every agent decision")

    parser = argparse.ArgumentParser(
        description="Explore malaria intervention policies by cost per DALY averted",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        parents=[common],
        epilog="""
Examples:
  python main.py explore -c docs/district_setup.json -o results/ulcb
  python main.py top -r results/ulcb/runs.jsonl -k 3
  python main.py simulate -c scenario.yaml --policy 0.6,0.04 --seed 7
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    explore = sub.add_parser("explore", parents=[common], help="Run an experiment")
    explore.add_argument("-c", "--config", required=True, help="Experiment config (YAML or JSON)")
    explore.add_argument("-o", "--output", default=None, help="Output directory (overrides output_dir)")
    explore.add_argument("--workers", type=int, default=None, help="Parallel simulations (overrides workers)")
    explore.set_defaults(handler=cmd_explore)

    surface = sub.add_parser("surface", parents=[common], help="Regress a runs log onto a grid")
    surface.add_argument("-r", "--runs", required=True, help="runs.jsonl or its directory")
    surface.add_argument("-o", "--output", required=True, help="CSV file to write")
    _add_gp_options(surface)
    surface.set_defaults(handler=cmd_surface)

    top = sub.add_parser("top", parents=[common], help="Print the top policies of a runs log")
    top.add_argument("-r", "--runs", required=True)
    top.add_argument("-k", type=int, default=3)
    _add_gp_options(top)
    top.set_defaults(handler=cmd_top)

    simulate = sub.add_parser("simulate", parents=[common], help="Evaluate one policy against its baseline")
    simulate.add_argument("-c", "--config", required=True, help="Scenario parameters or external adapter document")
    simulate.add_argument("--policy", required=True, help="ITN,IRS coverage fractions, e.g. 0.6,0.04")
    simulate.add_argument("--seed", type=int, required=True)
    simulate.set_defaults(handler=cmd_simulate)

    compare = sub.add_parser("compare", parents=[common], help="Side-by-side top policies of several runs logs")
    compare.add_argument("-r", "--runs", nargs="+", required=True)
    compare.add_argument("-k", type=int, default=3)
    _add_gp_options(compare)
    compare.set_defaults(handler=cmd_compare)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except ConfigurationError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyRunsError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_EMPTY
    except (BatchAbortedError, ExternalSimError) as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_ABORTED
    except ExplorerError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        print("\n\nInterrupted by user.")
        return EXIT_ERROR
    except Exception as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        traceback.print_exc()
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
