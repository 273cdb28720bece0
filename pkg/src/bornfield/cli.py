"""Command-line entry point.

Exit codes: 0 ok, 2 configuration or input error, 3 numerical blowup,
4 audit invalid (baseline ledger does not close).  Every error is also
printed to stderr as a one-line JSON diagnostic.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import COMMANDS, FORMATS, ConfigError, parse_config
from .detection_mc import DetectionError
from .energy_audit import AuditInvalidError, SweepError
from .fock_space import FockSpaceError
from .maxwell_fdtd import GridError, NumericalBlowupError
from .probability_rules import RuleError
from .reporting import run_command

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_AUDIT_INVALID = 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, SweepError):
        return exit_code_for(exc.cause)
    if isinstance(exc, NumericalBlowupError):
        return EXIT_BLOWUP
    if isinstance(exc, AuditInvalidError):
        return EXIT_AUDIT_INVALID
    if isinstance(exc, (ConfigError, RuleError, FockSpaceError, GridError, DetectionError, ValueError, OSError)):
        return EXIT_CONFIG
    raise exc


def diagnostic(exc: BaseException, code: int) -> dict:
    d = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ConfigError):
        d.update(key=exc.key, line=exc.line)
    if isinstance(exc, NumericalBlowupError):
        d["step"] = exc.step
    if isinstance(exc, SweepError):
        d["parameter"] = exc.value
    return d


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bornfield",
        description="Coherent-state detection statistics and the classical Poynting energy ledger.",
    )
    p.add_argument("command", nargs="?", choices=COMMANDS, help="overrides 'command' in the config file")
    p.add_argument("--config", type=Path, help="TOML config, or a JSON config echoed by a previous run")
    p.add_argument("--seed", type=int, help="overrides 'seed' in the config file")
    p.add_argument("--out", type=Path, help="output directory (default: output.dir, else '.')")
    p.add_argument("--format", choices=FORMATS, help="which artifacts to write")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text, command=args.command, seed=args.seed)
        if args.format:
            cfg = replace(cfg, format=args.format)
        paths = run_command(cfg, args.out)
    except Exception as exc:
        code = exit_code_for(exc)
        print(json.dumps(diagnostic(exc, code), sort_keys=True), file=sys.stderr)
        return code
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
