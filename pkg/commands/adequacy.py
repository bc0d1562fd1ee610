"""Round-trip a file's transition system through reify and interp."""

import argparse
import asyncio
from typing import List

from core.cli import Command, CommandRegistry, natural_int
from core.config import settings
from core.transition import check_adequacy
from core.types import AdequacyReport, ExitStatus, ItemReport

from .check import check_file


class AdequacyCommand(Command):
    name = "adequacy"
    help = "check the trace adequacy round trip"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("file", metavar="FILE")
        parser.add_argument(
            "--max-len", type=natural_int, default=settings.ADEQUACY_MAX_LEN, metavar="N", help="path length bound"
        )
        parser.add_argument(
            "--term-len", type=natural_int, default=settings.ADEQUACY_TERM_LEN, metavar="N", help="trace term length bound"
        )

    async def run(self, args: argparse.Namespace) -> List[ItemReport]:
        item, checked = await asyncio.to_thread(check_file, args.file)
        if checked is None or not checked.ok:
            return [item]
        report = await asyncio.to_thread(check_adequacy, checked.system, checked.kernel, args.max_len, args.term_len)
        status = ExitStatus.OK if report.passed else ExitStatus.FAILURE
        return [ItemReport(name=args.file, status=status, details={"report": report.model_dump(by_alias=True)})]

    def summary(self, item: ItemReport) -> List[str]:
        if "report" not in item.details:
            return []
        report = AdequacyReport.model_validate(item.details["report"])
        if report.passed:
            return [
                f"round-trip OK, {report.paths} paths over {report.connected_pairs} endpoint pair(s), {report.terms} terms"
            ]
        return [f"round-trip FAILED, {len(report.failures) + len(report.completeness)} problem(s)"] + [
            *report.failures,
            *report.completeness,
        ]


def setup(registry: CommandRegistry) -> None:
    registry.add_command(AdequacyCommand())
