import argparse
import logging
import os
import sys
from logging.handlers import TimedRotatingFileHandler

from dotenv import load_dotenv

from commands import COMMANDS
from config import get_settings
from models.schemas import ExperimentConfig
from utils.errors import ConfigError, RademacherError

load_dotenv()

logger = logging.getLogger(__name__)

# config key -> (type, help); each key is also a flag, --key
FLAGS = {
    "model": (str, "two_runs | subgraph | degree | complex | hypercube"),
    "n": (int, "graph order, complex vertex count or cube dimension"),
    "p": (float, "edge / face retention probability"),
    "d": (int, "vertex degree to count"),
    "kappa": (int, "dimension of the random complex"),
    "alpha": (str, "comma-separated 2-runs weights"),
    "pattern": (str, "named pattern or edge-list file for subgraph counts"),
    "variant": (str, "r0 | r1 | r2 | gamma0 | 2nd_R1 | 2nd_R2 | 2nd_W | fourth | all"),
    "samples": (int, "Monte Carlo samples per point"),
    "seed": (int, "master seed"),
    "refine": (int, "interior grid points per atom gap for kol_r0"),
    "out": (str, "output file (stdout when omitted)"),
    "format": (str, "csv | json"),
    "filter": (str, "comma-separated check suites for verify"),
    "n_grid": (str, "comma-separated sizes for rate"),
    "p_law": (str, "p as a function of n: c/n, n^e, c*n^e or a constant"),
    "regime": (str, "dense | sparse (degree rate predictions)"),
    "eps": (float, "epsilon of the hypercube rate prediction"),
    "threads": (int, "Monte Carlo worker threads"),
    "constant": (float, "constant of the 2-runs J1+J2 bound"),
}

# older hyphenated spellings
ALIASES = {"n_grid": "--n-grid", "p_law": "--p-law"}


def configure_logging() -> logging.Logger:
    settings = get_settings()
    log_path = os.path.join(os.getcwd(), settings.LOG_DIR)
    if not os.path.exists(log_path):
        os.makedirs(log_path)
    log_formatter = logging.Formatter(
        '%(asctime)s - %(pathname)20s:%(lineno)4s - %(funcName)20s() - %(levelname)s ## %(message)s')
    handler = TimedRotatingFileHandler(os.path.join(log_path, settings.LOG_FILE),
                                       when="d",
                                       interval=1,
                                       backupCount=10)
    handler.setFormatter(log_formatter)
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(logging.WARNING)
    console.setFormatter(logging.Formatter('%(levelname)s ## %(message)s'))

    root = logging.getLogger()
    if not len(root.handlers):
        root.addHandler(handler)
        root.addHandler(console)
    root.setLevel(getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO))
    return root


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rademacher-stein",
        description="Normal approximation bounds for Rademacher functionals",
    )
    parser.add_argument("--version", action="version", version=get_settings().VERSION)
    commands = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("bound", "evaluate Kolmogorov / Wasserstein bounds for one model instance"),
        ("verify", "run the exact check suites"),
        ("rate", "Monte Carlo rate sweep over an n grid"),
        ("selftest", "fast sanity subset of the checks"),
    ):
        sub = commands.add_parser(name, help=text)
        sub.add_argument("--config", help="INI file with [experiment], [model] and [output] sections")
        for key, (kind, help_text) in FLAGS.items():
            names = [f"--{key}"] + ([ALIASES[key]] if key in ALIASES else [])
            sub.add_argument(*names, dest=key, type=kind, default=None, help=help_text)
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file values overridden by whatever flags were given"""
    overrides = {key: getattr(args, key) for key in FLAGS}
    overrides["command"] = args.command
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}")
        return ExperimentConfig.from_ini(text, **overrides)
    return ExperimentConfig.build(**{k: v for k, v in overrides.items() if v is not None})


def main(argv=None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)

    try:
        cfg = load_config(args)
        _, code = COMMANDS[cfg.command.value](cfg)
    except RademacherError as exc:
        logger.info("%s failed: %s", args.command, exc)
        sys.stderr.write(f"{exc}\n")
        return exc.exit_code
    return code


if __name__ == "__main__":
    sys.exit(main())
