"""Unit tests for the type-checking kernel."""

import pytest
from hypothesis import given, settings, strategies as st

from core.kernel import (
    ErrorKind,
    InternalKernelError,
    Kernel,
    KernelError,
    check_module,
    motive_result,
    step_case_type,
)
from core.metatheory import CREDENTIAL_SYSTEM
from core.parser import parse_file, parse_term
from core.syntax import (
    EMPTY_CONTEXT,
    App,
    Bottom,
    CorecDecl,
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
    StepTy,
    StepWitness,
    Succ,
    TraceElim,
    Universe,
    Var,
    Zero,
    apply,
)

LENGTH_MOTIVE = "fun a => fun u => Nat"
COUNTING_STEP = "fun s1 => fun prev => fun e => fun s2 => fun p => fun ih => succ(ih)"


def _nat(n):
    term = Zero()
    for _ in range(n):
        term = Succ(term)
    return term


def _kind(excinfo):
    return excinfo.value.kind


class TestInference:
    @pytest.mark.parametrize(
        "term, expected",
        [
            (Universe(Layer.UC, 0), Universe(Layer.UC, 1)),
            (Universe(Layer.TYPE, 2), Universe(Layer.TYPE, 3)),
            (Universe(Layer.PROP), Universe(Layer.TYPE, 0)),
            (StateTy(), Universe(Layer.UC, 0)),
            (NatTy(), Universe(Layer.UC, 0)),
            (Bottom(), Universe(Layer.PROP)),
            (Zero(), NatTy()),
            (FinTraceTy(StateConst("NoCred"), StateConst("Valid")), Universe(Layer.UC, 0)),
        ],
    )
    def test_base_rules(self, credential_kernel, term, expected):
        assert credential_kernel.infer(EMPTY_CONTEXT, term) == expected

    def test_pi_universes(self, credential_kernel):
        k = credential_kernel
        assert k.infer(EMPTY_CONTEXT, Pi(NatTy(), Bottom(), "n")) == Universe(Layer.PROP)
        assert k.infer(EMPTY_CONTEXT, Pi(NatTy(), NatTy(), "n")) == Universe(Layer.UC, 0)
        assert k.infer(EMPTY_CONTEXT, Pi(Universe(Layer.UC, 0), Var(0), "A")) == Universe(Layer.UC, 1)
        # A proposition as domain does not raise the level.
        assert k.infer(EMPTY_CONTEXT, Pi(Bottom(), Universe(Layer.TYPE, 0), "h")) == Universe(Layer.TYPE, 1)

    def test_quantifying_over_propositions_is_not_a_proposition(self, credential_kernel):
        k = credential_kernel
        assert k.infer(EMPTY_CONTEXT, Pi(Universe(Layer.PROP), Var(0), "A")) == Universe(Layer.TYPE, 0)
        assert k.infer(EMPTY_CONTEXT, Pi(Universe(Layer.TYPE, 0), Bottom(), "A")) == Universe(Layer.TYPE, 1)
        assert k.infer(EMPTY_CONTEXT, Pi(Bottom(), Bottom(), "h")) == Universe(Layer.PROP)

    def test_declared_witness_type(self, credential_kernel):
        assert credential_kernel.infer(EMPTY_CONTEXT, StepWitness("w_revoke")) == StepTy(
            StateConst("Valid"), EventConst("Revoke"), StateConst("Revoked")
        )

    def test_step_extends_trace(self, credential_kernel):
        t = Step(Nil(StateConst("NoCred")), EventConst("Issue"), StepWitness("w_issue"))
        assert credential_kernel.infer(EMPTY_CONTEXT, t) == FinTraceTy(StateConst("NoCred"), StateConst("Valid"))

    def test_applied_lambda_is_inferable(self, credential_kernel):
        t = App(Lam(Succ(Var(0)), "n"), Zero())
        assert credential_kernel.normalize(EMPTY_CONTEXT, credential_kernel.infer(EMPTY_CONTEXT, t)).term == NatTy()

    def test_variable_types_come_from_context(self, credential_kernel):
        ctx = EMPTY_CONTEXT.extend("A", Universe(Layer.UC, 0)).extend("a", Var(0))
        assert credential_kernel.infer(ctx, Var(0)) == Var(1)
        credential_kernel.check_context(ctx)


class TestErrors:
    def test_unbound_variable(self, credential_kernel):
        with pytest.raises(KernelError) as excinfo:
            credential_kernel.infer(EMPTY_CONTEXT, Var(0))
        assert _kind(excinfo) is ErrorKind.UNBOUND_VARIABLE

    def test_bare_lambda_is_uninferable(self, credential_kernel):
        with pytest.raises(KernelError) as excinfo:
            credential_kernel.infer(EMPTY_CONTEXT, Lam(Var(0), "x"))
        assert _kind(excinfo) is ErrorKind.UNINFERABLE_TERM

    def test_lambda_against_non_function(self, credential_kernel):
        with pytest.raises(KernelError) as excinfo:
            credential_kernel.check(EMPTY_CONTEXT, Lam(Var(0), "x"), NatTy())
        assert _kind(excinfo) is ErrorKind.NOT_A_FUNCTION

    def test_applying_a_non_function(self, credential_kernel):
        with pytest.raises(KernelError) as excinfo:
            credential_kernel.infer(EMPTY_CONTEXT, App(Zero(), Zero()))
        assert _kind(excinfo) is ErrorKind.NOT_A_FUNCTION

    def test_universe_is_not_its_own_type(self, credential_kernel):
        with pytest.raises(KernelError) as excinfo:
            credential_kernel.check(EMPTY_CONTEXT, Universe(Layer.UC, 0), Universe(Layer.UC, 0))
        assert _kind(excinfo) is ErrorKind.UNIVERSE_MISMATCH

    def test_step_from_wrong_state(self, credential_kernel):
        t = Step(Nil(StateConst("Revoked")), EventConst("Use"), StepWitness("w_use"))
        with pytest.raises(KernelError) as excinfo:
            credential_kernel.infer(EMPTY_CONTEXT, t)
        assert _kind(excinfo) is ErrorKind.ENDPOINT_MISMATCH
        assert excinfo.value.expected == StateConst("Revoked")
        assert excinfo.value.actual == StateConst("Valid")

    def test_step_with_wrong_event(self, credential_kernel):
        t = Step(Nil(StateConst("Valid")), EventConst("Revoke"), StepWitness("w_use"))
        with pytest.raises(KernelError) as excinfo:
            credential_kernel.infer(EMPTY_CONTEXT, t)
        assert _kind(excinfo) is ErrorKind.CONVERSION_FAILURE

    def test_trace_endpoint_conversion_failure(self, credential_kernel):
        t = Step(Nil(StateConst("NoCred")), EventConst("Issue"), StepWitness("w_issue"))
        with pytest.raises(KernelError) as excinfo:
            credential_kernel.check(EMPTY_CONTEXT, t, FinTraceTy(StateConst("NoCred"), StateConst("Revoked")))
        assert _kind(excinfo) is ErrorKind.CONVERSION_FAILURE

    def test_ill_formed_context(self, credential_kernel):
        ctx = EMPTY_CONTEXT.extend("x", Zero())
        with pytest.raises(KernelError) as excinfo:
            credential_kernel.check_context(ctx)
        assert _kind(excinfo) is ErrorKind.ILL_FORMED_CONTEXT

    def test_motive_must_return_a_universe(self, credential_kernel):
        t = TraceElim(Zero(), Zero(), Zero(), Nil(StateConst("NoCred")))
        with pytest.raises(KernelError) as excinfo:
            credential_kernel.infer(EMPTY_CONTEXT, t)
        assert _kind(excinfo) is ErrorKind.MOTIVE_MISMATCH

    def test_unknown_constant(self, credential_kernel):
        with pytest.raises(KernelError) as excinfo:
            credential_kernel.infer(EMPTY_CONTEXT, StateConst("Nowhere"))
        assert _kind(excinfo) is ErrorKind.UNKNOWN_CONSTANT

    def test_error_renders_with_surface_syntax(self, credential_kernel):
        t = Step(Nil(StateConst("Revoked")), EventConst("Use"), StepWitness("w_use"))
        with pytest.raises(KernelError) as excinfo:
            credential_kernel.infer(EMPTY_CONTEXT, t)
        text = str(excinfo.value)
        assert text.startswith("EndpointMismatch")
        assert "expected Revoked, got Valid" in text


class TestComputation:
    def test_pi_beta(self, credential_kernel):
        t = App(Lam(Succ(Succ(Var(0))), "n"), Succ(Zero()))
        assert credential_kernel.normalize(EMPTY_CONTEXT, t).term == _nat(3)

    def test_trace_elim_on_nil(self, credential_module, credential_kernel):
        t = TraceElim(
            parse_term(LENGTH_MOTIVE, credential_module),
            Zero(),
            parse_term(COUNTING_STEP, credential_module),
            Nil(StateConst("NoCred")),
        )
        assert credential_kernel.normalize(EMPTY_CONTEXT, t).term == Zero()

    def test_trace_elim_on_step_unfolds_once(self, credential_module, credential_kernel):
        motive = parse_term(LENGTH_MOTIVE, credential_module)
        step_case = parse_term(COUNTING_STEP, credential_module)
        prefix = Nil(StateConst("NoCred"))
        t = TraceElim(motive, Zero(), step_case, Step(prefix, EventConst("Issue"), StepWitness("w_issue")))
        assert credential_kernel.reduce_step(t) == apply(
            step_case,
            StateConst("NoCred"),
            prefix,
            EventConst("Issue"),
            StateConst("Valid"),
            StepWitness("w_issue"),
            TraceElim(motive, Zero(), step_case, prefix),
        )

    def test_length_of_revoked_trace(self, credential_module, credential_kernel):
        t = parse_term("length Revoked revoked", credential_module)
        credential_kernel.check(EMPTY_CONTEXT, t, NatTy())
        normal = credential_kernel.normalize(EMPTY_CONTEXT, t)
        assert normal.term == _nat(3)
        assert normal.is_canonical

    def test_witness_variable_endpoints_come_from_context(self, credential_module, credential_kernel):
        ctx = EMPTY_CONTEXT.extend("p", StepTy(StateConst("NoCred"), EventConst("Issue"), StateConst("Valid")))
        t = TraceElim(
            parse_term(LENGTH_MOTIVE, credential_module),
            Zero(),
            parse_term(COUNTING_STEP, credential_module),
            Step(Nil(StateConst("NoCred")), EventConst("Issue"), Var(0)),
        )
        credential_kernel.check(ctx, t, NatTy())
        assert credential_kernel.normalize(ctx, t).term == _nat(1)

    def test_unannotated_witness_leaves_eliminator_stuck(self, credential_module, credential_kernel):
        body = TraceElim(
            parse_term(LENGTH_MOTIVE, credential_module),
            Zero(),
            parse_term(COUNTING_STEP, credential_module),
            Step(Nil(StateConst("NoCred")), EventConst("Issue"), Var(0)),
        )
        normal = credential_kernel.normalize(None, Lam(body, "p")).term
        assert isinstance(normal, Lam)
        assert isinstance(normal.body, TraceElim)

    def test_conversion_under_a_binder_sees_outer_witnesses(self, credential_module, credential_kernel):
        ctx = EMPTY_CONTEXT.extend("p", StepTy(StateConst("NoCred"), EventConst("Issue"), StateConst("Valid")))
        body = TraceElim(
            parse_term(LENGTH_MOTIVE, credential_module),
            Zero(),
            parse_term(COUNTING_STEP, credential_module),
            Step(Nil(StateConst("NoCred")), EventConst("Issue"), Var(1)),
        )
        lam = Lam(body, "x")
        credential_kernel.check(ctx, lam, Pi(NatTy(), NatTy(), "x"))
        assert credential_kernel.normalize(ctx, lam).term == Lam(_nat(1), "x")
        assert credential_kernel.conv(ctx, lam, Lam(_nat(1), "x"))
        assert credential_kernel.normalize(ctx, App(lam, Zero())).term == _nat(1)

        current = lam
        while (reduct := credential_kernel.reduce_step(current, ctx)) is not None:
            current = reduct
        assert current == Lam(_nat(1), "x")

    def test_conversion_through_definitions(self, credential_module, credential_kernel):
        assert credential_kernel.conv(EMPTY_CONTEXT, parse_term("idState NoCred", credential_module), StateConst("NoCred"))
        assert not credential_kernel.conv(EMPTY_CONTEXT, StateConst("NoCred"), StateConst("Valid"))

    def test_normalize_is_idempotent_on_corpus(self, credential_checked, monitoring_checked, defaults_checked):
        for checked in (credential_checked, monitoring_checked, defaults_checked):
            for decl in checked.module.defs:
                once = checked.kernel.normalize(EMPTY_CONTEXT, decl.body).term
                assert checked.kernel.normalize(EMPTY_CONTEXT, once).term == once
                type_once = checked.kernel.normalize(EMPTY_CONTEXT, decl.type).term
                assert checked.kernel.normalize(EMPTY_CONTEXT, type_once).term == type_once

    def test_reduce_step_returns_none_on_normal_forms(self, credential_kernel):
        assert credential_kernel.reduce_step(_nat(2)) is None

    def test_fuel_exhaustion_is_internal(self, credential_module, credential_checked):
        kernel = Kernel(credential_checked.system, fuel=3)
        with pytest.raises(InternalKernelError):
            kernel.normalize(EMPTY_CONTEXT, parse_term("length Revoked revoked", credential_module))

    def test_step_case_type_shape(self):
        motive = Lam(Lam(NatTy(), "t"), "s")
        expected = step_case_type(motive, StateConst("NoCred"))
        assert isinstance(expected, Pi) and expected.domain == StateTy()
        assert motive_result(motive, StateConst("A"), Zero()) == App(App(motive, StateConst("A")), Zero())


class TestModules:
    def test_corpus_modules_check(self, credential_checked, monitoring_checked, defaults_checked):
        assert credential_checked.ok
        assert monitoring_checked.ok
        assert defaults_checked.ok
        assert credential_checked.checked_defs == ["issued", "used", "idState", "revoked", "length", "revokedLength"]
        assert monitoring_checked.guarded_corecs == ["monitor", "recovering", "alarmed"]

    def test_type_error_is_reported_per_declaration(self, fixtures_dir):
        checked = check_module(parse_file(str(fixtures_dir / "type_error.dekl")))
        assert not checked.ok
        assert checked.checked_defs == ["fine"]
        [diagnostic] = checked.diagnostics
        assert diagnostic.kind == "ConversionFailure"
        assert diagnostic.declaration == "wrong"
        assert diagnostic.line == 6
        assert diagnostic.expected == "FinTrace(A, A)"
        assert diagnostic.actual == "FinTrace(A, B)"

    def test_unguarded_corecursion_is_rejected(self, fixtures_dir):
        checked = check_module(parse_file(str(fixtures_dir / "unguarded.dekl")))
        assert checked.guarded_corecs == ["good"]
        [diagnostic] = checked.diagnostics
        assert diagnostic.kind == "UnguardedCorecursion"
        assert diagnostic.declaration == "bad"

    def test_invalid_system(self, fixtures_dir):
        checked = check_module(parse_file(str(fixtures_dir / "bad_system.dekl")))
        assert [d.kind for d in checked.diagnostics] == ["InvalidSystem"]

    def test_observation_of_guarded_corecursion(self, monitoring_checked):
        observed = monitoring_checked.kernel.observe_inftrace("recovering", 50)
        assert len(observed) == 101
        assert observed[:5] == ["Ok", "e_viol", "Alarm", "e_reset", "Ok"]
        assert observed[-1] in ("Ok", "Alarm")

    def test_observation_of_unguarded_corecursion_fails(self, fixtures_dir):
        kernel = Kernel.from_module(parse_file(str(fixtures_dir / "unguarded.dekl")))
        assert kernel.observe_inftrace("good", 3) == ["A", "E", "A", "E", "A", "E", "A"]
        with pytest.raises(KernelError) as excinfo:
            kernel.observe_inftrace("bad", 1)
        assert _kind(excinfo) is ErrorKind.UNGUARDED_CORECURSION


@st.composite
def guarded_definitions(draw):
    """A table of ``head σ; tail(e, m)`` definitions over the credential signature."""
    count = draw(st.integers(min_value=1, max_value=4))
    corecs = {}
    for index in range(count):
        head = StateConst(draw(st.sampled_from(CREDENTIAL_SYSTEM.states)))
        if draw(st.booleans()):
            head = App(Lam(Var(0), "s"), head)
        event = EventConst(draw(st.sampled_from(CREDENTIAL_SYSTEM.events)))
        tail = f"c{draw(st.integers(min_value=0, max_value=count - 1))}"
        corecs[f"c{index}"] = CorecDecl(f"c{index}", head, event, tail)
    return corecs


class TestObservation:
    @settings(max_examples=200, deadline=None)
    @given(guarded_definitions(), st.integers(min_value=0, max_value=8), st.integers(min_value=0, max_value=8))
    def test_shallow_observation_is_a_prefix_of_deeper(self, corecs, depth, more):
        kernel = Kernel(CREDENTIAL_SYSTEM, corecs)
        shallow = kernel.observe_inftrace("c0", depth)
        deep = kernel.observe_inftrace("c0", depth + more)
        assert len(shallow) == 2 * depth + 1
        assert deep[: len(shallow)] == shallow

        current, walked = "c0", []
        for _ in range(depth):
            decl = corecs[current]
            walked += [kernel.normalize(EMPTY_CONTEXT, decl.head_state).term.name, decl.tail_event.name]
            current = decl.tail_ref
        walked.append(kernel.normalize(EMPTY_CONTEXT, corecs[current].head_state).term.name)
        assert shallow == walked

    def test_negative_depth(self, monitoring_checked):
        with pytest.raises(ValueError):
            monitoring_checked.kernel.observe_inftrace("monitor", -1)
