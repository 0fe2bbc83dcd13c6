import argparse
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

# --- 1. SETUP AND CONFIGURATION ---

# GRGAD_LOG may live in a .env file next to the run
load_dotenv()

from agents.pipeline import STAGES, run_ablation, run_pipeline, run_stage
from grgad.config import PipelineConfig, load_config, log_level_from_env, with_overrides
from grgad.errors import GrGADError, StageError
from grgad.scoring import EvalReport

logger = logging.getLogger(__name__)

COMMANDS = STAGES + ("pipeline", "ablate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grgad",
        description="Group-level graph anomaly detection: locate anchor nodes with a multi-hop "
                    "autoencoder, sample path/tree/cycle candidate groups, embed them contrastively "
                    "and score them with an empirical-CDF outlier detector.",
        epilog="Exit codes: 0 ok, 2 invalid config, 3 missing artifact, 4 malformed input, 5 other failure. "
               "Set GRGAD_LOG=DEBUG|INFO|WARNING|ERROR for verbosity.")
    parser.add_argument("command", nargs="?", choices=COMMANDS,
                        help="stage to run from persisted artifacts, 'pipeline' for the full run, "
                             "or 'ablate' for the target/embedding ablation table")
    parser.add_argument("--stage", choices=COMMANDS, help="same as the positional command")
    parser.add_argument("--config", type=Path, help="JSON pipeline config (defaults apply when omitted)")
    parser.add_argument("--out", type=Path, help="run directory; overrides output.directory")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    return parser


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    return with_overrides(config, seed=args.seed, **{"output.directory": args.out})


def print_summary(report: EvalReport | None, config: PipelineConfig) -> None:
    print(f"Run directory : {config.out_dir}")
    print(f"Config hash   : {config.config_hash()[:16]}  seed {config.seed}")
    if report is None:
        print("No ground truth available; verdicts written without evaluation.")
        return
    auc = "n/a" if report.auc is None else f"{report.auc:.4f}"
    print(f"Groups        : {report.num_groups} candidates, {report.num_predicted} flagged "
          f"(threshold {report.threshold:.4f})")
    print(f"CR            : {report.cr:.4f} over {report.num_gt_groups} ground-truth groups")
    print(f"F1 / AUC      : {report.f1:.4f} / {auc}")
    print(f"Confusion     : {report.confusion}")
    print(f"Coverage      : {report.coverage_histogram}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command and args.stage and args.command != args.stage:
        parser.error(f"conflicting commands '{args.command}' and '--stage {args.stage}'")
    command = args.stage or args.command
    if command is None:
        parser.error("a command is required (or --stage NAME)")

    # Configure logging for the entire application
    logging.basicConfig(level=log_level_from_env(), format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    try:
        config = resolve_config(args)
        if command == "pipeline":
            print_summary(run_pipeline(config), config)
        elif command == "ablate":
            print(run_ablation(config).to_string(index=False))
        else:
            result = run_stage(command, config)
            if command == "evaluate":
                print_summary(result["report"], config)
            else:
                logger.info(f"Stage '{command}' complete.")
        return 0
    except StageError as e:
        logger.error(f"Stage '{e.stage}' failed: {e.cause}")
        print(f"error: stage '{e.stage}' failed: {e.cause}", file=sys.stderr)
        return e.exit_code
    except GrGADError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
