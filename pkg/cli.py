"""
Command-line entry point.

    python cli.py simulate config/reference.toml --protocol leach --seed 0 --out-dir out/leach
    python cli.py compare config/reference.toml --seeds 0 1 2 --out-dir out/compare
    python cli.py sweep config/reference.toml --out-dir out/sweep

Exit codes: 0 success, 2 config error, 3 missing dependency artifact.
``WSN_OUT_DIR`` overrides ``--out-dir``.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from src.domain.errors import ConfigError, MissingArtifactError, SchemaError, WsnError
from src.domain.models import MilpWeights
from src.infrastructure.artifacts import schema_check
from src.infrastructure.config import load_config, settings
from src.services import experiment_service
from src.services.net_model import generate_topology
from sb_utils.file_utils import write_text_atomic
from sb_utils.logger_utils import logger, set_level
from sb_utils.validation import describe_validation_error

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_MISSING_ARTIFACT = 3

console = Console()


def _out_dir(args) -> Path:
    return Path(settings.WSN_OUT_DIR or args.out_dir)


def _workers(args) -> int:
    return args.workers if args.workers is not None else settings.worker_count()


# --- Command handlers ---
def cmd_simulate(args) -> int:
    exp = load_config(args.config)
    result = experiment_service.simulate(exp, args.protocol, args.seed, _out_dir(args))
    console.print_json(json.dumps(result.summary()))
    return EXIT_OK


def cmd_compare(args) -> int:
    exp = load_config(args.config)
    seeds = args.seeds if args.seeds else exp.compare.seeds
    if not seeds:
        raise ConfigError("compare needs at least one seed", ["[compare].seeds: empty"])
    report = experiment_service.compare(exp, seeds, _out_dir(args), _workers(args))

    table = Table(title=f"Protocol comparison ({len(seeds)} seeds, medians)")
    for column in ("protocol", "FND", "HND", "LND", "PDR", "control packets"):
        table.add_column(column, justify="right" if column != "protocol" else "left")
    for protocol, m in report.medians().items():
        table.add_row(
            protocol,
            f"{m['fnd']:.0f}" if m["fnd"] is not None else "-",
            f"{m['hnd']:.0f}" if m["hnd"] is not None else "-",
            f"{m['lnd']:.0f}" if m["lnd"] is not None else "-",
            f"{m['pdr']:.4f}",
            str(m["control_packets_total"]),
        )
    console.print(table)
    return EXIT_OK


def cmd_sweep(args) -> int:
    exp = load_config(args.config)
    if args.metric is not None:
        exp = exp.model_copy(update={"sweep": exp.sweep.model_copy(update={"metric": args.metric})})
    report = experiment_service.sweep(exp, _out_dir(args), _workers(args))
    label = report.metric.upper()
    table = Table(title=f"Best sweep points ({label})")
    for column in ("alpha", "beta", "gamma", "seed", label):
        table.add_column(column, justify="right")
    ranked = sorted(report.rows, key=lambda r: (-(r[4] or -1), r[:4]))
    for a, b, g, seed, value in ranked[: args.top]:
        table.add_row(f"{a:g}", f"{b:g}", f"{g:g}", str(seed), "-" if value is None else str(value))
    console.print(table)
    return EXIT_OK


def cmd_train_agent(args) -> int:
    exp = load_config(args.config)
    if args.total_steps is not None:
        exp = exp.model_copy(update={"dqn": exp.dqn.model_copy(update={"total_steps": args.total_steps})})
    outcome = experiment_service.train_agent(exp, _out_dir(args))
    console.print(f"trained {outcome.agent.steps} steps over {outcome.episodes} episodes")
    return EXIT_OK


def cmd_build_dataset(args) -> int:
    exp = load_config(args.config)
    path = experiment_service.build_dataset(exp, _out_dir(args), _workers(args))
    console.print(f"dataset written to {path}")
    return EXIT_OK


def cmd_train_surrogate(args) -> int:
    exp = load_config(args.config)
    evaluation = experiment_service.train_surrogate(exp, _out_dir(args))
    console.print_json(json.dumps(evaluation.summary()))
    return EXIT_OK


def cmd_solve(args) -> int:
    exp = load_config(args.config)
    weights = None
    if args.weights:
        alpha, beta, gamma = args.weights
        try:
            weights = MilpWeights(alpha=alpha, beta=beta, gamma=gamma)
        except ValidationError as e:
            raise ConfigError("invalid --weights", describe_validation_error(e, "--weights")) from e
    sol = experiment_service.solve(exp, Path(args.state_file), weights, args.k)
    text = json.dumps(sol.to_dict(), indent=2, sort_keys=True)
    if args.out:
        write_text_atomic(Path(args.out), text + "\n")
    print(text)
    return EXIT_OK


def cmd_schema_check(args) -> int:
    failures = 0
    for path in args.files:
        try:
            name = schema_check(Path(path))
            console.print(f"[green]ok[/green] {path} ({name})")
        except (SchemaError, OSError) as e:
            failures += 1
            console.print(f"[red]fail[/red] {e}")
    return EXIT_FAILURE if failures else EXIT_OK


def cmd_topology(args) -> int:
    exp = load_config(args.config)
    cfg = exp.network.model_copy(update={"seed": args.seed})
    path = experiment_service.write_topology(generate_topology(cfg), _out_dir(args))
    console.print(f"topology written to {path}")
    return EXIT_OK


# --- Parser ---
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsn-rlc", description="WSN clustering workbench")
    parser.add_argument("--log-level", default=None, help="overrides LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler, config: bool = True, workers: bool = False):
        p = sub.add_parser(name)
        if config:
            p.add_argument("config", nargs="?", type=Path, default=None, help="TOML experiment file")
        p.add_argument("--out-dir", default="out")
        if workers:
            p.add_argument("--workers", type=int, default=None, help="parallel runs (default WSN_WORKERS)")
        p.set_defaults(handler=handler)
        return p

    p = add("simulate", cmd_simulate)
    p.add_argument("--protocol", choices=["leach", "leach-c", "leach-rlc", "milp"], default="leach")
    p.add_argument("--seed", type=int, default=0)

    p = add("compare", cmd_compare, workers=True)
    p.add_argument("--seeds", type=int, nargs="*", default=None)

    p = add("sweep", cmd_sweep, workers=True)
    p.add_argument("--metric", choices=["fnd", "hnd", "lnd"], default=None, help="overrides [sweep].metric")
    p.add_argument("--top", type=int, default=10)

    p = add("train-agent", cmd_train_agent)
    p.add_argument("--total-steps", type=int, default=None)

    add("build-dataset", cmd_build_dataset, workers=True)
    add("train-surrogate", cmd_train_surrogate)

    p = add("solve", cmd_solve)
    p.add_argument("--state-file", required=True)
    p.add_argument("--weights", type=float, nargs=3, metavar=("ALPHA", "BETA", "GAMMA"))
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--out", default=None, help="also write the JSON here")

    p = add("schema-check", cmd_schema_check, config=False)
    p.add_argument("files", nargs="+")

    p = add("topology", cmd_topology)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    set_level(args.log_level or settings.LOG_LEVEL)
    try:
        return args.handler(args)
    except ConfigError as e:
        for line in e.diagnostics or [str(e)]:
            print(line, file=sys.stderr)
        logger.error("Config error", extra={"component": "cli", "error": str(e)})
        return EXIT_CONFIG
    except MissingArtifactError as e:
        print(str(e), file=sys.stderr)
        logger.error("Missing artifact", extra={"component": "cli", "error": str(e)})
        return EXIT_MISSING_ARTIFACT
    except WsnError as e:
        print(str(e), file=sys.stderr)
        logger.error("Run failed", extra={"component": "cli", "error": str(e)}, exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
