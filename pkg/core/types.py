"""Pydantic models for DEKL reports."""

from enum import IntEnum
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class ExitStatus(IntEnum):
    """Process exit statuses; a multi-item run exits with the largest."""

    OK = 0
    FAILURE = 1
    INPUT_ERROR = 2
    INTERNAL = 3


class ReportModel(BaseModel):
    """Base for report models serialised with camelCase aliases."""

    model_config = ConfigDict(populate_by_name=True)

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True)


class Diagnostic(ReportModel):
    """One rejected input: a parse error, type error or analysis failure."""

    kind: str
    message: str
    file: Optional[str] = None
    line: Optional[int] = None
    col: Optional[int] = None
    declaration: Optional[str] = None
    expected: Optional[str] = None
    actual: Optional[str] = None

    def __str__(self) -> str:
        where = ""
        if self.file is not None:
            where = f"{self.file}:{self.line or 1}:{self.col or 1}: "
        text = f"{where}{self.kind}: {self.message}"
        if self.expected is not None or self.actual is not None:
            text += f" (expected {self.expected}, got {self.actual})"
        return text


class OrphanWitness(ReportModel):
    """A prefix witness with no preimage along a one-step extension."""

    prefix: str
    whole: str
    orphan: str
    event: str
    step: str
    edge_index: int = Field(alias="edgeIndex")


class NonMonotonicityReport(ReportModel):
    presheaf: str
    verdict: Literal["monotone-on-base", "non-monotone"]
    witnesses: List[OrphanWitness] = Field(default_factory=list)
    prefix_stable: bool = Field(alias="prefixStable")
    depth: int
    roots: List[str] = Field(default_factory=list)
    base_size: int = Field(default=0, alias="baseSize")

    @property
    def orphan_events(self) -> List[str]:
        """Distinct events of the non-surjective edges, in report order."""
        seen: List[str] = []
        for witness in self.witnesses:
            if witness.event not in seen:
                seen.append(witness.event)
        return seen


class LocalizationReport(ReportModel):
    """Where along a path a prefix witness stops extending."""

    presheaf: str
    path: str
    witness: str
    from_length: int = Field(alias="fromLength")
    edge_index: Optional[int] = Field(default=None, alias="edgeIndex")
    event: Optional[str] = None


class PropertyFailure(ReportModel):
    seed_offset: int = Field(alias="seedOffset")
    counterexample: str


class PropertyReport(ReportModel):
    """Outcome of one metatheory property over a batch of generated samples."""

    property: str
    iterations: int
    failures: List[PropertyFailure] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


class ConsistencyReport(ReportModel):
    max_size: int = Field(alias="maxSize")
    goal: str
    inhabitant: Optional[str] = None
    sanity_goal: str = Field(alias="sanityGoal")
    sanity_inhabitant: Optional[str] = Field(default=None, alias="sanityInhabitant")

    @property
    def consistent(self) -> bool:
        return self.inhabitant is None and self.sanity_inhabitant is not None


class AdequacyReport(ReportModel):
    max_len: int = Field(alias="maxLen")
    term_len: int = Field(alias="termLen")
    paths: int
    connected_pairs: int = Field(default=0, alias="connectedPairs")
    terms: int
    failures: List[str] = Field(default_factory=list)
    completeness: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures and not self.completeness


class ItemReport(ReportModel):
    """Result for one input of a command (a file, a presheaf or a suite)."""

    name: str
    status: ExitStatus
    diagnostics: List[Diagnostic] = Field(default_factory=list)
    details: Dict[str, Any] = Field(default_factory=dict)


class RunReport(ReportModel):
    schema_version: Literal[1] = Field(default=1, alias="schemaVersion")
    command: str
    arguments: Dict[str, Any] = Field(default_factory=dict)
    exit_status: ExitStatus = Field(default=ExitStatus.OK, alias="exitStatus")
    items: List[ItemReport] = Field(default_factory=list)
    timing_ms: float = Field(default=0.0, alias="timingMs")

    def deterministic_json(self) -> str:
        """The JSON report without the timing field."""
        return self.model_dump_json(by_alias=True, exclude={"timing_ms"})
