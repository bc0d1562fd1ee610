"""Unit tests for the surface parser and printer."""

import pytest

from core.metatheory import GenConfig, generate_well_typed
from core.parser import ParseError, parse_file, parse_module, parse_term, pretty_print, tokenize
from core.presheaf import And, CountAtLeast, EvidenceSpec, Not, Occurs, Or, PredicateSpec, TabulatedSpec
from core.syntax import (
    App,
    Bottom,
    CorecRef,
    EventConst,
    FinTraceTy,
    Lam,
    Layer,
    NatTy,
    Nil,
    Pi,
    StateConst,
    StateTy,
    Step,
    StepWitness,
    Succ,
    Universe,
    Var,
    Zero,
    alpha_eq,
)


class TestTokenizer:
    def test_comments_and_positions(self):
        tokens = tokenize("state A. -- trailing\n  event E.")
        assert [t.text for t in tokens] == ["state", "A", ".", "event", "E", ".", ""]
        assert (tokens[3].line, tokens[3].col) == (2, 3)

    def test_step_arrow_symbols(self):
        assert [t.text for t in tokenize("A -[E]-> B")][:-1] == ["A", "-[", "E", "]->", "B"]

    def test_rejects_unknown_characters(self):
        with pytest.raises(ParseError) as excinfo:
            tokenize("state A$.", "f.dekl")
        assert str(excinfo.value).startswith("f.dekl:1:8")


class TestDeclarations:
    def test_credential_module_shape(self, credential_module):
        assert [d.name for d in credential_module.states] == ["NoCred", "Valid", "Revoked"]
        assert [d.name for d in credential_module.events] == ["Issue", "Use", "Revoke"]
        assert [d.witness for d in credential_module.steps] == ["w_issue", "w_use", "w_revoke", "w_reissue"]
        assert [d.name for d in credential_module.presheaves] == ["Auth", "Const"]

    def test_definitions_are_inlined(self, credential_module):
        used = next(d for d in credential_module.defs if d.name == "used")
        issued = Step(Nil(StateConst("NoCred")), EventConst("Issue"), StepWitness("w_issue"))
        assert used.body == Step(issued, EventConst("Use"), StepWitness("w_use"))

    def test_presheaf_specs(self, credential_module):
        auth, const = (d.spec for d in credential_module.presheaves)
        assert auth == EvidenceSpec("Auth", "Issue", "Revoke", ("NoCred",), 4)
        assert isinstance(const, PredicateSpec)
        assert const.expr == CountAtLeast("Use", 0)

    def test_policy_precedence(self):
        module = parse_module(
            "state S. event A. event B. event C.\n"
            "presheaf P := predicate not occurs(A) and occurs(B) or occurs(C) from S."
        )
        [decl] = module.presheaves
        assert decl.spec.expr == Or(And(Not(Occurs("A")), Occurs("B")), Occurs("C"))
        assert decl.spec.depth is None

    def test_named_policies(self, defaults_checked):
        [decl] = defaults_checked.module.presheaves
        assert decl.spec.expr == Not(Or(Occurs("Risk"), CountAtLeast("Strike", 2)))

    def test_table_presheaf(self, fixtures_dir):
        module = parse_file(str(fixtures_dir / "incoherent.dekl"))
        [decl] = module.presheaves
        spec = decl.spec
        assert isinstance(spec, TabulatedSpec)
        assert len(spec.fibers) == 3
        assert len(spec.maps) == 3
        prefix, whole, pairs = spec.maps[2]
        assert (len(prefix), len(whole), pairs) == (0, 2, (("x", "y"),))

    def test_corecursive_forward_reference(self, monitoring_checked):
        recovering = monitoring_checked.module.corec("recovering")
        assert recovering.head_state == StateConst("Ok")
        assert recovering.tail_event == EventConst("e_viol")
        assert recovering.tail_ref == "alarmed"

    def test_spans_cover_declarations(self, credential_module):
        revoked = next(d for d in credential_module.defs if d.name == "revoked")
        assert revoked.span.file.endswith("credential.dekl")
        assert revoked.span.start_col == 1


class TestParseErrors:
    def test_fixture_reports_position(self, fixtures_dir):
        with pytest.raises(ParseError) as excinfo:
            parse_file(str(fixtures_dir / "parse_error.dekl"))
        assert excinfo.value.span.start_line == 4
        assert "','" in excinfo.value.expected

    @pytest.mark.parametrize(
        "source, message",
        [
            ("state A. state A.", "already declared"),
            ("state A. event E. step A -[E]-> B as w.", "unknown state"),
            ("state A. def x : State := B.", "unknown identifier"),
            ("state A. def f : State -> State -> State := fun x => fun x => x.", "shadows"),
            ("corec m := head A; tail(E, n).", "unknown"),
            ("state A. presheaf P := predicate occurs(E) from A.", "unknown event"),
        ],
    )
    def test_rejections(self, source, message):
        with pytest.raises(ParseError) as excinfo:
            parse_module(source)
        assert message in str(excinfo.value)

    def test_missing_terminator(self):
        with pytest.raises(ParseError) as excinfo:
            parse_module("state A")
        assert "end of input" in str(excinfo.value) or excinfo.value.found == ""


class TestTerms:
    @pytest.mark.parametrize(
        "text, expected",
        [
            ("Nat -> Nat", Pi(NatTy(), NatTy(), "_")),
            ("(n : Nat) -> FinTrace(NoCred, NoCred)", Pi(NatTy(), FinTraceTy(StateConst("NoCred"), StateConst("NoCred")), "n")),
            ("fun x => succ(x)", Lam(Succ(Var(0)), "x")),
            ("Uc(1)", Universe(Layer.UC, 1)),
            ("Type(0) -> Prop", Pi(Universe(Layer.TYPE, 0), Universe(Layer.PROP), "_")),
            ("bot", Bottom()),
            ("(fun x => x) zero", App(Lam(Var(0), "x"), Zero())),
            ("State -> State -> State", Pi(StateTy(), Pi(StateTy(), StateTy(), "_"), "_")),
        ],
    )
    def test_parse(self, credential_module, text, expected):
        assert parse_term(text, credential_module) == expected

    def test_bound_names(self):
        assert parse_term("x y", None, names=["x", "y"]) == App(Var(1), Var(0))

    def test_dependent_arrow_shifts_codomain(self):
        # In "A -> B" the codomain may not see the new binder.
        assert parse_term("Nat -> x", None, names=["x"]) == Pi(NatTy(), Var(1), "_")

    def test_corecursive_names_resolve(self, monitoring_checked):
        assert parse_term("monitor", monitoring_checked.module) == CorecRef("monitor")

    def test_trailing_input_is_rejected(self):
        with pytest.raises(ParseError):
            parse_term("zero zero )")


class TestPrinting:
    def test_arrow_and_dependent_forms(self):
        assert pretty_print(Pi(NatTy(), NatTy(), "n")) == "Nat -> Nat"
        assert pretty_print(Pi(StateTy(), FinTraceTy(Var(0), Var(0)), "s")) == "(s : State) -> FinTrace(s, s)"
        assert pretty_print(Pi(Pi(NatTy(), NatTy(), "_"), NatTy(), "_")) == "(Nat -> Nat) -> Nat"

    def test_fresh_names_avoid_constants(self):
        t = Lam(App(Var(0), StateConst("s")), "s")
        assert pretty_print(t) == "fun s1 => s1 s"

    def test_context_names(self):
        assert pretty_print(App(Var(0), Var(1)), ["f", "x"]) == "x f"

    def test_corpus_round_trip(self, credential_module, credential_checked, monitoring_checked, defaults_checked):
        for checked in (credential_checked, monitoring_checked, defaults_checked):
            module = checked.module
            for decl in module.defs:
                for term in (decl.type, decl.body):
                    assert alpha_eq(parse_term(pretty_print(term), module), term)

    @pytest.mark.parametrize(
        "cfg",
        [
            GenConfig(seed=7, iterations=200),
            pytest.param(GenConfig(seed=0, iterations=1000), marks=pytest.mark.slow),
        ],
    )
    def test_generated_terms_round_trip(self, credential_module, cfg):
        for i in range(cfg.iterations):
            ctx, term, type_ = generate_well_typed(cfg, i)
            names = ctx.names()
            for t in (term, type_):
                assert alpha_eq(parse_term(pretty_print(t, ctx), credential_module, names), t)
