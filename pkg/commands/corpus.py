"""Run the bundled application corpus and compare it against the recorded verdicts."""

import argparse
import asyncio
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from core.cli import Command, CommandRegistry
from core.config import settings
from core.kernel import CheckedModule, InternalKernelError, KernelError
from core.presheaf import PresheafError, analyze_nonmonotonicity, build_presheaf, validate_presheaf
from core.transition import check_adequacy
from core.types import Diagnostic, ExitStatus, ItemReport

from .check import check_file

logger = logging.getLogger(__name__)

EXPECTED_FILE = "expected.json"


class PresheafExpectation(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    verdict: str
    prefix_stable: bool = Field(alias="prefixStable")
    orphan_events: List[str] = Field(default_factory=list, alias="orphanEvents")


class FileExpectation(BaseModel):
    status: ExitStatus = ExitStatus.OK
    defs: List[str] = Field(default_factory=list)
    presheaves: Dict[str, PresheafExpectation] = Field(default_factory=dict)
    observations: Dict[str, List[str]] = Field(default_factory=dict)


class CorpusExpectation(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(alias="schemaVersion")
    files: Dict[str, FileExpectation]


def load_expectations(directory: Path) -> CorpusExpectation:
    """
    Raises:
        OSError: if the expectation file cannot be read
        ValidationError: if it does not match the expected schema
    """
    with open(directory / EXPECTED_FILE, encoding="utf-8") as handle:
        return CorpusExpectation.model_validate(json.load(handle))


def _mismatch(file: str, what: str, expected: object, actual: object, declaration: Optional[str] = None) -> Diagnostic:
    return Diagnostic(
        kind="CorpusMismatch",
        message=f"{what} differs from the recorded verdict",
        file=file,
        declaration=declaration,
        expected=str(expected),
        actual=str(actual),
    )


def _compare_presheaves(checked: CheckedModule, expected: FileExpectation) -> List[Diagnostic]:
    file = checked.module.file
    problems: List[Diagnostic] = []
    declared = {decl.name: decl for decl in checked.presheaves}
    for name, want in sorted(expected.presheaves.items()):
        decl = declared.get(name)
        if decl is None:
            problems.append(_mismatch(file, "presheaf declaration", name, None, name))
            continue
        try:
            presheaf = build_presheaf(decl.spec, checked.system)
            validate_presheaf(presheaf)
        except PresheafError as exc:
            problems.append(_mismatch(file, "presheaf build", want.verdict, exc, name))
            continue
        report = analyze_nonmonotonicity(presheaf)
        if report.verdict != want.verdict:
            problems.append(_mismatch(file, "verdict", want.verdict, report.verdict, name))
        if report.prefix_stable != want.prefix_stable:
            problems.append(_mismatch(file, "prefix stability", want.prefix_stable, report.prefix_stable, name))
        if sorted(report.orphan_events) != sorted(want.orphan_events):
            problems.append(_mismatch(file, "orphan events", want.orphan_events, report.orphan_events, name))
    return problems


def _compare_observations(checked: CheckedModule, expected: FileExpectation) -> List[Diagnostic]:
    file = checked.module.file
    depth = settings.OBSERVE_DEPTH
    problems: List[Diagnostic] = []
    for name, want in sorted(expected.observations.items()):
        try:
            observed = checked.kernel.observe_inftrace(name, depth)
        except KernelError as exc:
            problems.append(_mismatch(file, "observation", want, exc, name))
            continue
        if len(observed) != 2 * depth + 1 or observed[: len(want)] != want:
            problems.append(_mismatch(file, "observation", want, observed[: len(want)], name))
    return problems


def run_corpus_file(path: Path, expected: FileExpectation) -> ItemReport:
    """Check one corpus file and compare every recorded verdict."""
    item, checked = check_file(str(path))
    problems: List[Diagnostic] = []
    if item.status != expected.status:
        problems.append(_mismatch(str(path), "check status", int(expected.status), int(item.status)))
    if checked is not None and checked.ok:
        if checked.checked_defs != expected.defs:
            problems.append(_mismatch(str(path), "checked definitions", expected.defs, checked.checked_defs))
        problems.extend(_compare_presheaves(checked, expected))
        try:
            problems.extend(_compare_observations(checked, expected))
        except InternalKernelError as exc:
            logger.error(f"Internal kernel error observing {path}: {exc}")
            return ItemReport(
                name=path.name,
                status=ExitStatus.INTERNAL,
                diagnostics=[Diagnostic(kind="InternalError", message=str(exc), file=str(path))],
            )
        adequacy = check_adequacy(checked.system, checked.kernel, settings.ADEQUACY_MAX_LEN, settings.ADEQUACY_TERM_LEN)
        if not adequacy.passed:
            problems.append(_mismatch(str(path), "adequacy round trip", "no failures", adequacy.failures + adequacy.completeness))

    if problems:
        logger.warning(f"Corpus file {path.name}: {len(problems)} mismatch(es)")
        return ItemReport(name=path.name, status=ExitStatus.FAILURE, diagnostics=problems)
    return ItemReport(
        name=path.name,
        status=ExitStatus.OK,
        details={"summary": f"{len(expected.presheaves)} presheaf verdict(s), {len(expected.observations)} observation(s) as recorded"},
    )


class CorpusCommand(Command):
    name = "corpus"
    help = "run the bundled corpus against its recorded verdicts"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--dir", metavar="DIR", help="corpus directory (default: bundled corpus)")

    def directory(self, args: argparse.Namespace) -> Path:
        return Path(args.dir) if args.dir else settings.corpus_path

    async def run(self, args: argparse.Namespace) -> List[ItemReport]:
        directory = self.directory(args)
        try:
            expectations = load_expectations(directory)
        except (OSError, ValueError, ValidationError) as exc:
            logger.error(f"Could not load corpus expectations from {directory}: {exc}")
            diagnostic = Diagnostic(kind="IOError", message=str(exc), file=str(directory / EXPECTED_FILE))
            return [ItemReport(name=EXPECTED_FILE, status=ExitStatus.INPUT_ERROR, diagnostics=[diagnostic])]

        names = sorted(expectations.files)
        return list(
            await asyncio.gather(
                *(asyncio.to_thread(run_corpus_file, directory / name, expectations.files[name]) for name in names)
            )
        )


def setup(registry: CommandRegistry) -> None:
    registry.add_command(CorpusCommand())
