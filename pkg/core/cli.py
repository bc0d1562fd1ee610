"""Command-line entry point: subcommand registry, orchestration and report output."""

import argparse
import asyncio
import importlib
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from .config import settings
from .logging import log_with_context, setup_logging
from .types import Diagnostic, ExitStatus, ItemReport, RunReport

logger = logging.getLogger(__name__)

# Loaded in this order; each module exposes setup(registry).
COMMAND_MODULES = (
    "commands.check",
    "commands.analyze",
    "commands.adequacy",
    "commands.meta",
    "commands.corpus",
)

_STATUS_LABELS = {
    ExitStatus.OK: ("ok", "\033[32m"),
    ExitStatus.FAILURE: ("FAIL", "\033[31m"),
    ExitStatus.INPUT_ERROR: ("ERROR", "\033[33m"),
    ExitStatus.INTERNAL: ("INTERNAL", "\033[35m"),
}
_RESET = "\033[0m"


class Command:
    """A subcommand. Subclasses declare their flags and produce one report item per input."""

    name: str = ""
    help: str = ""

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        pass

    def validate(self, args: argparse.Namespace) -> None:
        """Reject invalid flag values before anything runs.

        Raises:
            ValueError: with a message for the user
        """

    async def run(self, args: argparse.Namespace) -> List[ItemReport]:
        raise NotImplementedError

    def arguments(self, args: argparse.Namespace) -> Dict[str, Any]:
        """Flags echoed into the JSON report."""
        return {
            key: value
            for key, value in sorted(vars(args).items())
            if key not in ("command", "json", "verbose")
        }

    def summary(self, item: ItemReport) -> List[str]:
        """Extra human-readable lines printed under an item."""
        text = item.details.get("summary")
        return [text] if text else []


class CommandRegistry:
    def __init__(self) -> None:
        self.commands: Dict[str, Command] = {}

    def add_command(self, command: Command) -> None:
        if command.name in self.commands:
            raise ValueError(f"command {command.name} registered twice")
        self.commands[command.name] = command
        logger.debug(f"Registered command {command.name}")

    def get(self, name: str) -> Command:
        return self.commands[name]


def load_commands(registry: Optional[CommandRegistry] = None) -> CommandRegistry:
    registry = registry or CommandRegistry()
    for module_name in COMMAND_MODULES:
        importlib.import_module(module_name).setup(registry)
    return registry


def positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def natural_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def build_parser(registry: CommandRegistry) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dekl",
        description="Proof checker and semantic analyzer for trace-indexed epistemic logic",
    )
    parser.add_argument("--json", metavar="PATH", help="write the machine-readable report to PATH")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more log output (repeatable)")

    # Same flags after the subcommand; SUPPRESS keeps them from resetting values given before it.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--json", metavar="PATH", default=argparse.SUPPRESS, help="write the machine-readable report to PATH"
    )
    common.add_argument(
        "-v", "--verbose", action="count", default=argparse.SUPPRESS, help="more log output (repeatable)"
    )

    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in registry.commands.values():
        command.add_arguments(subparsers.add_parser(command.name, help=command.help, parents=[common]))
    return parser


def item_status(items: Sequence[ItemReport]) -> ExitStatus:
    """The largest item status; an empty run succeeds."""
    return max((item.status for item in items), default=ExitStatus.OK)


async def execute(command: Command, args: argparse.Namespace) -> RunReport:
    """
    Run one command and assemble its report.

    Unexpected exceptions are logged with their traceback and reported as an internal failure.
    """
    started = time.perf_counter()
    try:
        items = await command.run(args)
    except Exception as exc:
        logger.exception(f"Command {command.name} failed unexpectedly")
        items = [
            ItemReport(
                name=command.name,
                status=ExitStatus.INTERNAL,
                diagnostics=[Diagnostic(kind="InternalError", message=f"{type(exc).__name__}: {exc}")],
            )
        ]
    report = RunReport(
        command=command.name,
        arguments=command.arguments(args),
        exit_status=item_status(items),
        items=items,
        timing_ms=round((time.perf_counter() - started) * 1000, 3),
    )
    log_with_context(
        logger,
        logging.INFO,
        "Command finished",
        command=command.name,
        items=len(items),
        exit_status=int(report.exit_status),
        timing_ms=report.timing_ms,
    )
    return report


def _use_color() -> bool:
    return settings.COLOR and sys.stdout.isatty()


def render(report: RunReport, command: Command, color: Optional[bool] = None) -> str:
    """Human-readable report for standard output."""
    color = _use_color() if color is None else color
    lines = []
    for item in report.items:
        label, ansi = _STATUS_LABELS[item.status]
        if color:
            label = f"{ansi}{label}{_RESET}"
        lines.append(f"{label:>8}  {item.name}")
        lines.extend(f"          {diagnostic}" for diagnostic in item.diagnostics)
        lines.extend(f"          {line}" for line in command.summary(item))
    lines.append(f"{report.command}: {len(report.items)} item(s), exit {int(report.exit_status)}")
    return "\n".join(lines)


def write_json(report: RunReport, path: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(report.model_dump_json(by_alias=True, indent=2) + "\n", encoding="utf-8")
    logger.debug(f"Wrote JSON report to {target}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run the selected command and print its report.

    Returns:
        The process exit status
    """
    registry = load_commands()
    parser = build_parser(registry)
    args = parser.parse_args(argv)

    level = {0: None, 1: "INFO"}.get(args.verbose, "DEBUG")
    setup_logging(level=level)

    command = registry.get(args.command)
    try:
        command.validate(args)
    except (ValueError, ValidationError) as exc:
        parser.error(str(exc))

    report = asyncio.run(execute(command, args))
    print(render(report, command))
    if args.json:
        try:
            write_json(report, args.json)
        except OSError as exc:
            logger.error(f"Could not write JSON report to {args.json}: {exc}")
            return int(max(report.exit_status, ExitStatus.INPUT_ERROR))
    return int(report.exit_status)


if __name__ == "__main__":
    sys.exit(main())
