"""Tests for the command registry, orchestration and the dekl entry point."""

import argparse
import json

import pytest

from core.cli import (
    COMMAND_MODULES,
    Command,
    CommandRegistry,
    build_parser,
    execute,
    item_status,
    load_commands,
    main,
    render,
)
from core.types import ExitStatus, ItemReport


class Boom(Command):
    name = "boom"

    async def run(self, args):
        raise RuntimeError("kaput")


class Fixed(Command):
    name = "fixed"

    def __init__(self, *statuses):
        self.statuses = statuses

    async def run(self, args):
        return [ItemReport(name=f"item{i}", status=s, details={"summary": "all good"}) for i, s in enumerate(self.statuses)]


class TestRegistry:
    def test_loads_every_command(self):
        registry = load_commands()
        assert list(registry.commands) == [name.split(".")[-1] for name in COMMAND_MODULES]

    def test_duplicate_registration(self):
        registry = CommandRegistry()
        registry.add_command(Boom())
        with pytest.raises(ValueError):
            registry.add_command(Boom())

    def test_parser_requires_a_command(self):
        parser = build_parser(load_commands())
        with pytest.raises(SystemExit):
            parser.parse_args([])

    def test_arguments_exclude_globals(self):
        parser = build_parser(load_commands())
        args = parser.parse_args(["--json", "out.json", "-vv", "check", "a.dekl"])
        assert args.verbose == 2
        assert load_commands().get("check").arguments(args) == {"files": ["a.dekl"]}

    def test_globals_after_the_subcommand(self):
        parser = build_parser(load_commands())
        args = parser.parse_args(["check", "a.dekl", "-vv", "--json", "out.json"])
        assert (args.verbose, args.json) == (2, "out.json")
        assert load_commands().get("check").arguments(args) == {"files": ["a.dekl"]}

    def test_globals_default_when_absent(self):
        args = build_parser(load_commands()).parse_args(["check", "a.dekl"])
        assert (args.verbose, args.json) == (0, None)


class TestExecute:
    def test_item_status_is_the_maximum(self):
        items = [ItemReport(name="a", status=ExitStatus.FAILURE), ItemReport(name="b", status=ExitStatus.INPUT_ERROR)]
        assert item_status(items) == ExitStatus.INPUT_ERROR
        assert item_status([]) == ExitStatus.OK

    async def test_unexpected_exception_is_internal(self):
        report = await execute(Boom(), argparse.Namespace(command="boom"))
        assert report.exit_status == ExitStatus.INTERNAL
        [item] = report.items
        assert item.diagnostics[0].kind == "InternalError"
        assert "RuntimeError: kaput" in item.diagnostics[0].message

    async def test_report_carries_items_and_timing(self):
        report = await execute(Fixed(ExitStatus.OK, ExitStatus.FAILURE), argparse.Namespace(command="fixed"))
        assert report.exit_status == ExitStatus.FAILURE
        assert [item.name for item in report.items] == ["item0", "item1"]
        assert report.timing_ms >= 0

    async def test_render(self):
        command = Fixed(ExitStatus.OK)
        report = await execute(command, argparse.Namespace(command="fixed"))
        plain = render(report, command, color=False)
        assert plain.splitlines() == ["      ok  item0", "          all good", "fixed: 1 item(s), exit 0"]
        assert "\033[32m" in render(report, command, color=True)


class TestMain:
    def test_check_corpus(self, corpus_dir, capsys):
        files = [str(corpus_dir / name) for name in ("credential.dekl", "defaults.dekl", "monitoring.dekl")]
        assert main(["check", *files]) == 0
        out = capsys.readouterr().out
        assert "check: 3 item(s), exit 0" in out

    def test_type_error_fails(self, fixtures_dir, capsys):
        assert main(["check", str(fixtures_dir / "type_error.dekl")]) == 1
        out = capsys.readouterr().out
        assert "ConversionFailure" in out
        assert "type_error.dekl:6:" in out

    def test_parse_error_is_input_error(self, fixtures_dir, capsys):
        assert main(["check", str(fixtures_dir / "parse_error.dekl")]) == 2
        assert "parse_error.dekl:4:" in capsys.readouterr().out

    def test_missing_file(self, tmp_path, capsys):
        assert main(["check", str(tmp_path / "absent.dekl")]) == 2
        assert "IOError" in capsys.readouterr().out

    def test_worst_status_wins(self, corpus_dir, fixtures_dir):
        files = [str(corpus_dir / "credential.dekl"), str(fixtures_dir / "type_error.dekl"), str(fixtures_dir / "parse_error.dekl")]
        assert main(["check", *files]) == 2

    def test_analyze_names_the_revocation(self, corpus_dir, capsys):
        assert main(["analyze", str(corpus_dir / "credential.dekl"), "--presheaf", "Auth"]) == 0
        out = capsys.readouterr().out
        assert "non-monotone" in out
        assert "Revoke" in out
        assert "held from length 1 is lost at edge 2 (Revoke)" in out

    def test_analyze_unknown_presheaf(self, corpus_dir, capsys):
        assert main(["analyze", str(corpus_dir / "credential.dekl"), "--presheaf", "Nope"]) == 2
        assert "UnknownPresheaf" in capsys.readouterr().out

    def test_analyze_incoherent_table(self, fixtures_dir, capsys):
        assert main(["analyze", str(fixtures_dir / "incoherent.dekl")]) == 1
        assert "composition fails" in capsys.readouterr().out

    def test_adequacy(self, corpus_dir, capsys):
        assert main(["adequacy", str(corpus_dir / "credential.dekl"), "--max-len", "3", "--term-len", "3"]) == 0
        assert "round-trip OK" in capsys.readouterr().out

    def test_json_report(self, corpus_dir, tmp_path, capsys):
        target = tmp_path / "reports" / "check.json"
        assert main(["--json", str(target), "check", str(corpus_dir / "credential.dekl")]) == 0
        data = json.loads(target.read_text(encoding="utf-8"))
        assert data["schemaVersion"] == 1
        assert data["command"] == "check"
        assert data["exitStatus"] == 0
        assert data["arguments"] == {"files": [str(corpus_dir / "credential.dekl")]}
        assert data["items"][0]["details"]["defs"] == ["issued", "used", "idState", "revoked", "length", "revokedLength"]

    def test_json_flag_after_the_subcommand(self, corpus_dir, tmp_path, capsys):
        target = tmp_path / "analyze.json"
        assert main(["analyze", str(corpus_dir / "credential.dekl"), "--presheaf", "Auth", "--json", str(target)]) == 0
        details = json.loads(target.read_text(encoding="utf-8"))["items"][0]["details"]
        first = details["localizations"][0]
        assert (first["edgeIndex"], first["event"], first["fromLength"]) == (2, "Revoke", 1)
        assert len(details["localizations"]) == len(details["report"]["witnesses"])

    def test_unwritable_json_target(self, corpus_dir, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("", encoding="utf-8")
        assert main(["--json", str(blocker / "report.json"), "check", str(corpus_dir / "credential.dekl")]) == 2

    def test_corpus(self, capsys):
        assert main(["corpus"]) == 0
        assert "corpus: 3 item(s), exit 0" in capsys.readouterr().out

    def test_meta(self, capsys):
        assert main(["meta", "--seed", "1", "--iters", "5", "--max-size", "3"]) == 0
        out = capsys.readouterr().out
        for name in ("weakening", "substitution", "subject-reduction", "canonicity", "consistency"):
            assert name in out
        assert "5/5 samples passed" in out

    @pytest.mark.parametrize(
        "argv",
        [
            ["meta", "--max-size", "13"],
            ["meta", "--iters", "0"],
            ["meta", "--seed", "-1"],
            ["analyze", "x.dekl", "--depth", "0"],
            ["frobnicate"],
        ],
    )
    def test_invalid_flags(self, argv, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(argv)
        assert excinfo.value.code == 2
