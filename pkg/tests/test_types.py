"""Unit tests for data types and Pydantic models."""

import json

import pytest
from pydantic import ValidationError

from core.types import (
    AdequacyReport,
    ConsistencyReport,
    Diagnostic,
    ExitStatus,
    ItemReport,
    LocalizationReport,
    NonMonotonicityReport,
    OrphanWitness,
    PropertyFailure,
    PropertyReport,
    RunReport,
)


class TestExitStatus:
    def test_ordering(self):
        assert ExitStatus.OK < ExitStatus.FAILURE < ExitStatus.INPUT_ERROR < ExitStatus.INTERNAL
        assert max([ExitStatus.FAILURE, ExitStatus.INPUT_ERROR]) == 2


class TestDiagnostic:
    def test_str_with_position(self):
        diagnostic = Diagnostic(kind="ConversionFailure", message="types differ", file="a.dekl", line=6, col=1)
        assert str(diagnostic) == "a.dekl:6:1: ConversionFailure: types differ"

    def test_str_with_expected_and_actual(self):
        diagnostic = Diagnostic(kind="CorpusMismatch", message="verdict differs", expected="a", actual="b")
        assert str(diagnostic) == "CorpusMismatch: verdict differs (expected a, got b)"

    def test_missing_position_defaults_to_start(self):
        assert str(Diagnostic(kind="IOError", message="gone", file="x.dekl")).startswith("x.dekl:1:1:")


class TestReports:
    def test_orphan_witness_alias(self):
        witness = OrphanWitness(prefix="A", whole="A -[E/w]-> A", orphan="x", event="E", step="w", edge_index=1)
        assert json.loads(witness.to_json())["edgeIndex"] == 1
        assert OrphanWitness.model_validate(json.loads(witness.to_json())) == witness

    def test_orphan_events_are_distinct_and_ordered(self):
        witnesses = [
            OrphanWitness(prefix="p", whole="q", orphan=o, event=e, step="s", edgeIndex=1)
            for o, e in [("a", "Strike"), ("b", "Risk"), ("c", "Strike")]
        ]
        report = NonMonotonicityReport(
            presheaf="P", verdict="non-monotone", witnesses=witnesses, prefix_stable=False, depth=3
        )
        assert report.orphan_events == ["Strike", "Risk"]

    def test_verdict_is_constrained(self):
        with pytest.raises(ValidationError):
            NonMonotonicityReport(presheaf="P", verdict="sometimes", prefix_stable=True, depth=1)

    def test_localization_aliases(self):
        report = LocalizationReport(presheaf="Safe", path="Ok", witness="x", from_length=0, edge_index=2, event="e")
        dumped = report.model_dump(by_alias=True)
        assert dumped["fromLength"] == 0
        assert dumped["edgeIndex"] == 2

    def test_property_report(self):
        assert PropertyReport(property="weakening", iterations=3).passed
        failing = PropertyReport(
            property="weakening", iterations=3, failures=[PropertyFailure(seed_offset=2, counterexample="t")]
        )
        assert not failing.passed
        assert failing.model_dump(by_alias=True)["failures"][0]["seedOffset"] == 2

    def test_consistency_verdict(self):
        assert ConsistencyReport(max_size=4, goal="bot", sanity_goal="Nat", sanity_inhabitant="zero").consistent
        assert not ConsistencyReport(max_size=4, goal="bot", inhabitant="p", sanity_goal="Nat", sanity_inhabitant="zero").consistent
        assert not ConsistencyReport(max_size=4, goal="bot", sanity_goal="Nat").consistent

    def test_adequacy_passed(self):
        assert AdequacyReport(max_len=2, term_len=1, paths=3, terms=2).passed
        assert not AdequacyReport(max_len=2, term_len=1, paths=3, terms=2, completeness=["A -> B"]).passed


class TestRunReport:
    def _report(self, timing):
        item = ItemReport(name="a.dekl", status=ExitStatus.FAILURE, details={"defs": 2})
        return RunReport(
            command="check", arguments={"files": ["a.dekl"]}, exit_status=ExitStatus.FAILURE, items=[item], timing_ms=timing
        )

    def test_serialised_field_names(self):
        data = json.loads(self._report(1.5).to_json())
        assert data["schemaVersion"] == 1
        assert data["exitStatus"] == 1
        assert data["timingMs"] == 1.5
        assert data["items"][0]["status"] == 1

    def test_deterministic_json_ignores_timing(self):
        first, second = self._report(1.0), self._report(250.0)
        assert first.deterministic_json() == second.deterministic_json()
        assert "timingMs" not in json.loads(first.deterministic_json())

    def test_round_trip_through_aliases(self):
        report = self._report(3.0)
        assert RunReport.model_validate_json(report.to_json()) == report

    def test_schema_version_is_fixed(self):
        with pytest.raises(ValidationError):
            RunReport(command="check", schema_version=2)
