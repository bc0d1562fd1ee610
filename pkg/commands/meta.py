"""Run the structural metatheory suites and the bounded consistency search."""

import argparse
import asyncio
import logging
from typing import List

from core.cli import Command, CommandRegistry, natural_int, positive_int
from core.config import settings
from core.kernel import Kernel
from core.metatheory import CREDENTIAL_SYSTEM, STRUCTURAL_PROPERTIES, GenConfig, run_consistency, run_property
from core.types import ConsistencyReport, ExitStatus, ItemReport, PropertyReport

logger = logging.getLogger(__name__)


class MetaCommand(Command):
    name = "meta"
    help = "run the metatheory property suites"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--seed", type=natural_int, default=settings.META_SEED, metavar="N")
        parser.add_argument("--iters", type=positive_int, default=settings.META_ITERATIONS, metavar="N")
        parser.add_argument(
            "--max-size",
            type=positive_int,
            default=settings.CONSISTENCY_MAX_SIZE,
            metavar="N",
            help="size bound of the consistency search",
        )

    def config(self, args: argparse.Namespace) -> GenConfig:
        return GenConfig(seed=args.seed, iterations=args.iters)

    def validate(self, args: argparse.Namespace) -> None:
        self.config(args)
        if args.max_size > settings.CONSISTENCY_SIZE_LIMIT:
            raise ValueError(f"--max-size may be at most {settings.CONSISTENCY_SIZE_LIMIT}")

    async def run(self, args: argparse.Namespace) -> List[ItemReport]:
        cfg = self.config(args)
        kernel = Kernel(CREDENTIAL_SYSTEM)
        reports = await asyncio.gather(
            *(asyncio.to_thread(run_property, name, cfg, kernel) for name in STRUCTURAL_PROPERTIES),
            asyncio.to_thread(run_consistency, args.max_size),
        )
        *properties, consistency = reports

        items = [
            ItemReport(
                name=report.property,
                status=ExitStatus.OK if report.passed else ExitStatus.FAILURE,
                details={"report": report.model_dump(by_alias=True)},
            )
            for report in properties
        ]
        items.append(
            ItemReport(
                name="consistency",
                status=ExitStatus.OK if consistency.consistent else ExitStatus.FAILURE,
                details={"report": consistency.model_dump(by_alias=True)},
            )
        )
        return items

    def summary(self, item: ItemReport) -> List[str]:
        if "report" not in item.details:
            return []
        if item.name == "consistency":
            report = ConsistencyReport.model_validate(item.details["report"])
            found = report.inhabitant or "none"
            control = report.sanity_inhabitant or "none"
            return [f"{report.goal} up to size {report.max_size}: {found}; control {report.sanity_goal}: {control}"]
        prop = PropertyReport.model_validate(item.details["report"])
        lines = [f"{prop.iterations - len(prop.failures)}/{prop.iterations} samples passed"]
        lines.extend(f"#{failure.seed_offset}: {failure.counterexample}" for failure in prop.failures)
        return lines


def setup(registry: CommandRegistry) -> None:
    registry.add_command(MetaCommand())
