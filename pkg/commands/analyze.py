"""Build, validate and analyze the presheaves declared in a file."""

import argparse
import asyncio
import logging
from typing import List, Optional

from core.cli import Command, CommandRegistry, positive_int
from core.kernel import CheckedModule
from core.presheaf import (
    PresheafError,
    analyze_nonmonotonicity,
    build_presheaf,
    localize_orphans,
    validate_presheaf,
)
from core.syntax import PresheafDecl
from core.types import Diagnostic, ExitStatus, ItemReport, LocalizationReport, NonMonotonicityReport

from .check import check_file

logger = logging.getLogger(__name__)


def analyze_presheaf(checked: CheckedModule, decl: PresheafDecl, depth: Optional[int] = None) -> ItemReport:
    name = f"{checked.module.file}:{decl.name}"
    try:
        presheaf = build_presheaf(decl.spec, checked.system, depth=depth)
        validate_presheaf(presheaf)
    except PresheafError as exc:
        logger.warning(f"Presheaf {decl.name} rejected: {exc}")
        diagnostic = Diagnostic(
            kind="PresheafError",
            message=str(exc),
            file=checked.module.file,
            line=decl.span.start_line if decl.span else None,
            col=decl.span.start_col if decl.span else None,
            declaration=decl.name,
        )
        return ItemReport(name=name, status=ExitStatus.FAILURE, diagnostics=[diagnostic])
    report = analyze_nonmonotonicity(presheaf)
    details = {
        "report": report.model_dump(by_alias=True),
        "localizations": [located.model_dump(by_alias=True) for located in localize_orphans(presheaf)],
    }
    return ItemReport(name=name, status=ExitStatus.OK, details=details)


class AnalyzeCommand(Command):
    name = "analyze"
    help = "analyze presheaves for non-monotonicity"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("file", metavar="FILE")
        parser.add_argument("--presheaf", metavar="NAME", help="analyze only this presheaf")
        parser.add_argument("--depth", type=positive_int, metavar="N", help="trace length bound of the base")

    async def run(self, args: argparse.Namespace) -> List[ItemReport]:
        item, checked = await asyncio.to_thread(check_file, args.file)
        if checked is None or not checked.ok:
            return [item]

        decls = checked.presheaves
        if args.presheaf is not None:
            decls = [decl for decl in decls if decl.name == args.presheaf]
            if not decls:
                diagnostic = Diagnostic(
                    kind="UnknownPresheaf", message=f"no presheaf named '{args.presheaf}'", file=args.file
                )
                return [ItemReport(name=args.file, status=ExitStatus.INPUT_ERROR, diagnostics=[diagnostic])]

        return list(
            await asyncio.gather(*(asyncio.to_thread(analyze_presheaf, checked, decl, args.depth) for decl in decls))
        )

    def summary(self, item: ItemReport) -> List[str]:
        if "report" not in item.details:
            return []
        report = NonMonotonicityReport.model_validate(item.details["report"])
        lines = [
            f"{report.verdict} at depth {report.depth} over {report.base_size} trace(s); "
            f"prefix-stable: {'yes' if report.prefix_stable else 'no'}"
        ]
        for witness in report.witnesses:
            lines.append(f"{witness.whole} drops {witness.orphan} (edge {witness.edge_index}, {witness.event})")
        for raw in item.details.get("localizations", []):
            located = LocalizationReport.model_validate(raw)
            lines.append(
                f"{located.witness} held from length {located.from_length} is lost at edge {located.edge_index} "
                f"({located.event}) of {located.path}"
            )
        return lines


def setup(registry: CommandRegistry) -> None:
    registry.add_command(AnalyzeCommand())
