"""Type-check DEKL files."""

import argparse
import asyncio
import logging
from typing import List, Optional, Tuple

from core.cli import Command, CommandRegistry
from core.kernel import CheckedModule, InternalKernelError, check_module
from core.logging import log_with_context
from core.parser import ParseError, parse_file
from core.types import Diagnostic, ExitStatus, ItemReport

logger = logging.getLogger(__name__)


def parse_diagnostic(exc: ParseError) -> Diagnostic:
    return Diagnostic(
        kind="ParseError",
        message=exc.message,
        file=exc.span.file,
        line=exc.span.start_line,
        col=exc.span.start_col,
        expected=", ".join(exc.expected) or None,
        actual=exc.found or None,
    )


def check_file(path: str) -> Tuple[ItemReport, Optional[CheckedModule]]:
    """
    Parse and check one file.

    Returns:
        The file's report item, and the checked module when it parsed
    """
    try:
        module = parse_file(path)
    except ParseError as exc:
        log_with_context(logger, logging.WARNING, "Parse failed", file=path, line=exc.span.start_line)
        return ItemReport(name=path, status=ExitStatus.INPUT_ERROR, diagnostics=[parse_diagnostic(exc)]), None
    except (OSError, UnicodeDecodeError) as exc:
        logger.warning(f"Could not read {path}: {exc}")
        diagnostic = Diagnostic(kind="IOError", message=str(exc), file=path)
        return ItemReport(name=path, status=ExitStatus.INPUT_ERROR, diagnostics=[diagnostic]), None

    try:
        checked = check_module(module)
    except InternalKernelError as exc:
        logger.error(f"Internal kernel error while checking {path}: {exc}")
        diagnostic = Diagnostic(kind="InternalError", message=str(exc), file=path)
        return ItemReport(name=path, status=ExitStatus.INTERNAL, diagnostics=[diagnostic]), None

    item = ItemReport(
        name=path,
        status=ExitStatus.OK if checked.ok else ExitStatus.FAILURE,
        diagnostics=list(checked.diagnostics),
        details={
            "defs": list(checked.checked_defs),
            "corecs": list(checked.guarded_corecs),
            "presheaves": [decl.name for decl in checked.presheaves],
            "summary": f"{len(checked.checked_defs)} def(s), {len(checked.guarded_corecs)} corec(s) checked",
        },
    )
    return item, checked


class CheckCommand(Command):
    name = "check"
    help = "type-check files"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("files", nargs="+", metavar="FILE")

    async def run(self, args: argparse.Namespace) -> List[ItemReport]:
        results = await asyncio.gather(*(asyncio.to_thread(check_file, path) for path in args.files))
        return [item for item, _ in results]


def setup(registry: CommandRegistry) -> None:
    registry.add_command(CheckCommand())
