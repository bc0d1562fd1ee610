"""
Typing, definitional equality and normalization for the DEKL core.

The kernel is bidirectional: ``infer`` is syntax-directed and lambdas are only checked
against function types. Conversion normalizes both sides and compares the results.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from .config import settings
from .logging import log_with_context
from .parser import pretty_print
from .syntax import (
    EMPTY_CONTEXT,
    App,
    Bottom,
    Context,
    CorecDecl,
    CorecRef,
    Def,
    EventConst,
    EventTy,
    FinTraceTy,
    InfTraceTy,
    Lam,
    Layer,
    ModuleAST,
    NatTy,
    Nil,
    Pi,
    PresheafDecl,
    SourceSpan,
    StateConst,
    StateTy,
    Step,
    StepTy,
    StepWitness,
    Succ,
    Term,
    TraceElim,
    Universe,
    Var,
    Zero,
    apply,
    is_neutral,
    spine,
    shift,
    subst,
    subterms,
)
from .transition import TransitionError, TransitionSystem, validate_system
from .types import Diagnostic

logger = logging.getLogger(__name__)


class ErrorKind(str, Enum):
    UNBOUND_VARIABLE = "UnboundVariable"
    UNIVERSE_MISMATCH = "UniverseMismatch"
    NOT_A_FUNCTION = "NotAFunction"
    CONVERSION_FAILURE = "ConversionFailure"
    ENDPOINT_MISMATCH = "EndpointMismatch"
    ILL_FORMED_CONTEXT = "IllFormedContext"
    UNGUARDED_CORECURSION = "UnguardedCorecursion"
    MOTIVE_MISMATCH = "MotiveMismatch"
    UNINFERABLE_TERM = "UninferableTerm"
    UNKNOWN_CONSTANT = "UnknownConstant"


class KernelError(Exception):
    """
    A typing judgment that does not hold.

    ``expected`` and ``actual`` are normal forms, scope-valid in the context whose
    names are carried in ``names``.
    """

    def __init__(
        self,
        kind: ErrorKind,
        message: str,
        expected: Optional[Term] = None,
        actual: Optional[Term] = None,
        names: Tuple[str, ...] = (),
        span: Optional[SourceSpan] = None,
    ) -> None:
        super().__init__(message)
        self.kind = kind
        self.message = message
        self.expected = expected
        self.actual = actual
        self.names = names
        self.span = span

    def __str__(self) -> str:
        text = f"{self.kind.value}: {self.message}"
        if self.expected is not None or self.actual is not None:
            text += f" (expected {self._show(self.expected)}, got {self._show(self.actual)})"
        if self.span is not None:
            text = f"{self.span}: {text}"
        return text

    def _show(self, t: Optional[Term]) -> Optional[str]:
        return None if t is None else pretty_print(t, list(self.names))

    def to_diagnostic(self, declaration: Optional[str] = None) -> Diagnostic:
        return Diagnostic(
            kind=self.kind.value,
            message=self.message,
            file=self.span.file if self.span else None,
            line=self.span.start_line if self.span else None,
            col=self.span.start_col if self.span else None,
            declaration=declaration,
            expected=self._show(self.expected),
            actual=self._show(self.actual),
        )


class InternalKernelError(Exception):
    """Fuel exhaustion or a broken kernel invariant."""


@dataclass(frozen=True)
class NormalForm:
    term: Term
    is_canonical: bool


class _Fuel:
    def __init__(self, limit: int) -> None:
        self.left = limit

    def burn(self) -> None:
        self.left -= 1
        if self.left < 0:
            raise InternalKernelError("normalization fuel exhausted")


def _universe_of_pi(domain: Universe, codomain: Universe) -> Universe:
    # Pi lives in the codomain's hierarchy. A Prop codomain stays in Prop only over
    # computational or Prop domains; quantifying over Type(i) lands in Type(i).
    if codomain.layer is Layer.PROP:
        return Universe(Layer.TYPE, domain.level) if domain.layer is Layer.TYPE else codomain
    level = codomain.level if domain.layer is Layer.PROP else max(domain.level, codomain.level)
    return Universe(codomain.layer, level)


def _under_binder(ctx: Optional[Context], name: str) -> Optional[Context]:
    """Keep outer entries addressable under a lambda whose domain is not recorded."""
    return None if ctx is None else ctx.extend(name, Bottom())


def motive_result(motive: Term, state: Term, trace: Term) -> Term:
    return App(App(motive, state), trace)


def step_case_type(motive: Term, source: Term) -> Term:
    """
    Type of the step case of ``trace_elim`` with the given motive and trace source.

    ``(s1 : State) -> (t : FinTrace(src, s1)) -> (e : Event) -> (s2 : State) ->
    (p : Step(s1, e, s2)) -> P s1 t -> P s2 (step(t, e, p))``
    """
    result = motive_result(shift(motive, 6), Var(2), Step(Var(4), Var(3), Var(1)))
    hypothesis = Pi(motive_result(shift(motive, 5), Var(4), Var(3)), result, "ih")
    witness = Pi(StepTy(Var(3), Var(1), Var(0)), hypothesis, "p")
    target = Pi(StateTy(), witness, "s2")
    event = Pi(EventTy(), target, "e")
    trace = Pi(FinTraceTy(shift(source, 1), Var(0)), event, "t")
    return Pi(StateTy(), trace, "s1")


class Kernel:
    """Type checker over a fixed transition system and set of corecursive declarations."""

    def __init__(
        self,
        system: Optional[TransitionSystem] = None,
        corecs: Optional[Dict[str, CorecDecl]] = None,
        fuel: Optional[int] = None,
    ) -> None:
        self.system = system or TransitionSystem()
        self.corecs: Dict[str, CorecDecl] = dict(corecs or {})
        self.fuel = fuel or settings.NORMALIZE_FUEL

    @classmethod
    def from_module(cls, module: ModuleAST) -> "Kernel":
        return cls(TransitionSystem.from_module(module), {decl.name: decl for decl in module.corecs})

    # Contexts and types

    def check_context(self, ctx: Context) -> None:
        for position, (name, type_) in enumerate(ctx.entries):
            prefix = ctx.prefix(position)
            try:
                self.infer_universe(prefix, type_)
            except KernelError as exc:
                raise KernelError(
                    ErrorKind.ILL_FORMED_CONTEXT,
                    f"entry '{name}' is not a type: {exc.message}",
                    actual=type_,
                    names=tuple(prefix.names()),
                ) from exc

    def infer_universe(self, ctx: Context, t: Term) -> Universe:
        """The universe ``t`` inhabits, or UniverseMismatch if ``t`` is not a type."""
        sort = self.whnf(ctx, self.infer(ctx, t))
        if not isinstance(sort, Universe):
            raise KernelError(
                ErrorKind.UNIVERSE_MISMATCH,
                "expected a type",
                actual=self.normalize(ctx, sort).term,
                names=tuple(ctx.names()),
            )
        return sort

    # Inference

    def infer(self, ctx: Context, t: Term) -> Term:
        """
        Infer the type of ``t``.

        Args:
            ctx: A well-formed context
            t: Term scope-valid in ``ctx``

        Returns:
            A type A with ``check(ctx, t, A)``

        Raises:
            KernelError: if ``t`` is ill-typed
        """
        if isinstance(t, Var):
            if not 0 <= t.index < len(ctx):
                raise KernelError(ErrorKind.UNBOUND_VARIABLE, f"index {t.index} in a context of length {len(ctx)}")
            return ctx.lookup(t.index)
        if isinstance(t, Universe):
            if t.layer is Layer.PROP:
                return Universe(Layer.TYPE, 0)
            return Universe(t.layer, t.level + 1)
        if isinstance(t, (StateTy, EventTy, NatTy, InfTraceTy)):
            return Universe(Layer.UC, 0)
        if isinstance(t, Bottom):
            return Universe(Layer.PROP)
        if isinstance(t, FinTraceTy):
            self.check(ctx, t.src, StateTy())
            self.check(ctx, t.dst, StateTy())
            return Universe(Layer.UC, 0)
        if isinstance(t, StepTy):
            self.check(ctx, t.src, StateTy())
            self.check(ctx, t.event, EventTy())
            self.check(ctx, t.dst, StateTy())
            return Universe(Layer.UC, 0)
        if isinstance(t, Pi):
            domain = self.infer_universe(ctx, t.domain)
            codomain = self.infer_universe(ctx.extend(t.name, t.domain), t.codomain)
            return _universe_of_pi(domain, codomain)
        if isinstance(t, Lam):
            raise KernelError(ErrorKind.UNINFERABLE_TERM, "cannot infer the type of a bare lambda; annotate it with a def")
        if isinstance(t, App):
            return self._infer_app(ctx, t)
        if isinstance(t, StateConst):
            if t.name not in self.system.states:
                raise KernelError(ErrorKind.UNKNOWN_CONSTANT, f"unknown state '{t.name}'")
            return StateTy()
        if isinstance(t, EventConst):
            if t.name not in self.system.events:
                raise KernelError(ErrorKind.UNKNOWN_CONSTANT, f"unknown event '{t.name}'")
            return EventTy()
        if isinstance(t, StepWitness):
            try:
                step = self.system.step(t.name)
            except TransitionError:
                raise KernelError(ErrorKind.UNKNOWN_CONSTANT, f"unknown step witness '{t.name}'") from None
            return StepTy(StateConst(step.src), EventConst(step.event), StateConst(step.dst))
        if isinstance(t, Nil):
            self.check(ctx, t.state, StateTy())
            return FinTraceTy(t.state, t.state)
        if isinstance(t, Step):
            return self._infer_step(ctx, t)
        if isinstance(t, TraceElim):
            return self._infer_trace_elim(ctx, t)
        if isinstance(t, Zero):
            return NatTy()
        if isinstance(t, Succ):
            self.check(ctx, t.pred, NatTy())
            return NatTy()
        if isinstance(t, CorecRef):
            if t.name not in self.corecs:
                raise KernelError(ErrorKind.UNKNOWN_CONSTANT, f"unknown corecursive definition '{t.name}'")
            return InfTraceTy()
        raise InternalKernelError(f"no typing rule for {type(t).__name__}")

    def _infer_app(self, ctx: Context, t: App) -> Term:
        head, args = spine(t)
        if isinstance(head, Lam):
            # Lambdas applied to arguments take the arguments' inferred types as their domains.
            inner_ctx, body, taken = ctx, head, 0
            while isinstance(body, Lam) and taken < len(args):
                inner_ctx = inner_ctx.extend(body.name, shift(self.infer(ctx, args[taken]), taken))
                body = body.body
                taken += 1
            result = self.infer(inner_ctx, body)
            for position in reversed(range(taken)):
                result = subst(result, shift(args[position], position))
            rest = args[taken:]
        else:
            result = self.infer(ctx, head)
            rest = args

        for arg in rest:
            fn_type = self.whnf(ctx, result)
            if not isinstance(fn_type, Pi):
                raise KernelError(
                    ErrorKind.NOT_A_FUNCTION,
                    "applied term is not a function",
                    actual=self.normalize(ctx, fn_type).term,
                    names=tuple(ctx.names()),
                )
            self.check(ctx, arg, fn_type.domain)
            result = subst(fn_type.codomain, arg)
        return result

    def _trace_type(self, ctx: Context, t: Term) -> FinTraceTy:
        trace_type = self.whnf(ctx, self.infer(ctx, t))
        if not isinstance(trace_type, FinTraceTy):
            raise KernelError(
                ErrorKind.CONVERSION_FAILURE,
                "expected a finite trace",
                actual=self.normalize(ctx, trace_type).term,
                names=tuple(ctx.names()),
            )
        return trace_type

    def _infer_step(self, ctx: Context, t: Step) -> Term:
        prefix_type = self._trace_type(ctx, t.prefix)
        self.check(ctx, t.event, EventTy())
        witness_type = self.whnf(ctx, self.infer(ctx, t.witness))
        if not isinstance(witness_type, StepTy):
            raise KernelError(
                ErrorKind.CONVERSION_FAILURE,
                "expected a step witness",
                actual=self.normalize(ctx, witness_type).term,
                names=tuple(ctx.names()),
            )
        if not self.conv(ctx, prefix_type.dst, witness_type.src):
            raise KernelError(
                ErrorKind.ENDPOINT_MISMATCH,
                "step does not start where the trace ends",
                expected=self.normalize(ctx, prefix_type.dst).term,
                actual=self.normalize(ctx, witness_type.src).term,
                names=tuple(ctx.names()),
            )
        if not self.conv(ctx, t.event, witness_type.event):
            raise KernelError(
                ErrorKind.CONVERSION_FAILURE,
                "step witness is labelled with a different event",
                expected=self.normalize(ctx, t.event).term,
                actual=self.normalize(ctx, witness_type.event).term,
                names=tuple(ctx.names()),
            )
        return FinTraceTy(prefix_type.src, witness_type.dst)

    def _infer_trace_elim(self, ctx: Context, t: TraceElim) -> Term:
        scrutinee_type = self._trace_type(ctx, t.scrutinee)
        source = scrutinee_type.src
        self.check_motive(ctx, t.motive, source)
        self.check(ctx, t.base, motive_result(t.motive, source, Nil(source)))
        self.check(ctx, t.step_case, step_case_type(t.motive, source))
        return motive_result(t.motive, scrutinee_type.dst, t.scrutinee)

    def check_motive(self, ctx: Context, motive: Term, source: Term) -> Universe:
        """
        Check ``motive : (s : State) -> FinTrace(source, s) -> U`` for some universe U.

        Returns:
            The universe U
        """
        trace_domain = FinTraceTy(shift(source, 1), Var(0))
        try:
            if isinstance(motive, Lam):
                inner_ctx = ctx.extend(motive.name, StateTy())
                if isinstance(motive.body, Lam):
                    return self.infer_universe(inner_ctx.extend(motive.body.name, trace_domain), motive.body.body)
                return self._match_trace_family(inner_ctx, self.infer(inner_ctx, motive.body), trace_domain)
            motive_type = self.whnf(ctx, self.infer(ctx, motive))
            if isinstance(motive_type, Pi) and self.conv(ctx, motive_type.domain, StateTy()):
                inner_ctx = ctx.extend(motive_type.name, StateTy())
                return self._match_trace_family(inner_ctx, motive_type.codomain, trace_domain)
        except KernelError as exc:
            raise KernelError(
                ErrorKind.MOTIVE_MISMATCH, f"ill-formed motive: {exc.message}", names=tuple(ctx.names())
            ) from exc
        raise KernelError(
            ErrorKind.MOTIVE_MISMATCH,
            "motive must map a state and a trace into a universe",
            actual=self.normalize(ctx, motive).term,
            names=tuple(ctx.names()),
        )

    def _match_trace_family(self, ctx: Context, family: Term, trace_domain: Term) -> Universe:
        family = self.whnf(ctx, family)
        if isinstance(family, Pi) and self.conv(ctx, family.domain, trace_domain):
            codomain = self.whnf(ctx.extend(family.name, trace_domain), family.codomain)
            if isinstance(codomain, Universe):
                return codomain
        raise KernelError(
            ErrorKind.MOTIVE_MISMATCH,
            "motive must map a state and a trace into a universe",
            expected=Pi(trace_domain, Universe(Layer.TYPE, 0)),
            actual=self.normalize(ctx, family).term,
            names=tuple(ctx.names()),
        )

    # Checking

    def check(self, ctx: Context, t: Term, expected: Term) -> None:
        """
        Check ``t`` against ``expected`` up to conversion.

        Raises:
            KernelError: ConversionFailure with both normal forms, or any inference error
        """
        if isinstance(t, Lam):
            target = self.whnf(ctx, expected)
            if not isinstance(target, Pi):
                raise KernelError(
                    ErrorKind.NOT_A_FUNCTION,
                    "lambda checked against a non-function type",
                    actual=self.normalize(ctx, target).term,
                    names=tuple(ctx.names()),
                )
            self.check(ctx.extend(t.name, target.domain), t.body, target.codomain)
            return

        actual = self.infer(ctx, t)
        want = self.normalize(ctx, expected).term
        got = self.normalize(ctx, actual).term
        if want == got:
            return
        kind = ErrorKind.CONVERSION_FAILURE
        if isinstance(want, Universe) and isinstance(got, Universe):
            kind = ErrorKind.UNIVERSE_MISMATCH
        raise KernelError(kind, "type mismatch", expected=want, actual=got, names=tuple(ctx.names()))

    def accepts(self, ctx: Context, t: Term, expected: Term) -> bool:
        try:
            self.check(ctx, t, expected)
        except KernelError:
            return False
        return True

    def accepts_trace(self, t: Term, src: str, dst: str) -> bool:
        return self.accepts(EMPTY_CONTEXT, t, FinTraceTy(StateConst(src), StateConst(dst)))

    def conv(self, ctx: Context, a: Term, b: Term) -> bool:
        """Definitional equality: both sides normalize to the same term."""
        return self.normalize(ctx, a).term == self.normalize(ctx, b).term

    # Reduction

    def _witness_endpoints(self, witness: Term, locals_: Optional[Context]) -> Optional[Tuple[Term, Term]]:
        if isinstance(witness, StepWitness) and self.system.has_witness(witness.name):
            step = self.system.step(witness.name)
            return StateConst(step.src), StateConst(step.dst)
        if isinstance(witness, Var) and locals_ is not None and witness.index < len(locals_):
            witness_type = self._whnf(locals_.lookup(witness.index), locals_, _Fuel(self.fuel))
            if isinstance(witness_type, StepTy):
                return witness_type.src, witness_type.dst
        return None

    def _unfold_step(self, t: TraceElim, trace: Step, locals_: Optional[Context]) -> Optional[Term]:
        endpoints = self._witness_endpoints(trace.witness, locals_)
        if endpoints is None:
            return None
        src, dst = endpoints
        recursive = TraceElim(t.motive, t.base, t.step_case, trace.prefix)
        return apply(t.step_case, src, trace.prefix, trace.event, dst, trace.witness, recursive)

    def _whnf(self, t: Term, locals_: Optional[Context], fuel: _Fuel) -> Term:
        while True:
            if isinstance(t, App):
                fn = self._whnf(t.fn, locals_, fuel)
                if isinstance(fn, Lam):
                    fuel.burn()
                    t = subst(fn.body, t.arg)
                    continue
                return App(fn, t.arg)
            if isinstance(t, TraceElim):
                scrutinee = self._whnf(t.scrutinee, locals_, fuel)
                if isinstance(scrutinee, Nil):
                    fuel.burn()
                    t = t.base
                    continue
                if isinstance(scrutinee, Step):
                    witness = self._whnf(scrutinee.witness, locals_, fuel)
                    unfolded = self._unfold_step(t, Step(scrutinee.prefix, scrutinee.event, witness), locals_)
                    if unfolded is not None:
                        fuel.burn()
                        t = unfolded
                        continue
                return TraceElim(t.motive, t.base, t.step_case, scrutinee)
            return t

    def _nf(self, t: Term, locals_: Optional[Context], fuel: _Fuel) -> Term:
        t = self._whnf(t, locals_, fuel)
        if isinstance(t, Pi):
            domain = self._nf(t.domain, locals_, fuel)
            inner = locals_.extend(t.name, domain) if locals_ is not None else None
            return Pi(domain, self._nf(t.codomain, inner, fuel), t.name)
        if isinstance(t, Lam):
            return Lam(self._nf(t.body, _under_binder(locals_, t.name), fuel), t.name)
        if isinstance(t, App):
            return App(self._nf(t.fn, locals_, fuel), self._nf(t.arg, locals_, fuel))
        if isinstance(t, TraceElim):
            return TraceElim(
                self._nf(t.motive, locals_, fuel),
                self._nf(t.base, locals_, fuel),
                self._nf(t.step_case, locals_, fuel),
                self._nf(t.scrutinee, locals_, fuel),
            )
        if isinstance(t, Nil):
            return Nil(self._nf(t.state, locals_, fuel))
        if isinstance(t, Step):
            return Step(
                self._nf(t.prefix, locals_, fuel),
                self._nf(t.event, locals_, fuel),
                self._nf(t.witness, locals_, fuel),
            )
        if isinstance(t, FinTraceTy):
            return FinTraceTy(self._nf(t.src, locals_, fuel), self._nf(t.dst, locals_, fuel))
        if isinstance(t, StepTy):
            return StepTy(
                self._nf(t.src, locals_, fuel), self._nf(t.event, locals_, fuel), self._nf(t.dst, locals_, fuel)
            )
        if isinstance(t, Succ):
            return Succ(self._nf(t.pred, locals_, fuel))
        return t

    def whnf(self, ctx: Optional[Context], t: Term) -> Term:
        return self._whnf(t, ctx, _Fuel(self.fuel))

    def normalize(self, ctx: Optional[Context], t: Term) -> NormalForm:
        """
        Full beta and trace-eliminator normal form.

        Raises:
            InternalKernelError: if the fuel bound is exhausted
        """
        term = self._nf(t, ctx, _Fuel(self.fuel))
        return NormalForm(term, not is_neutral(term))

    def _contract(self, t: Term, locals_: Optional[Context]) -> Optional[Term]:
        if isinstance(t, App) and isinstance(t.fn, Lam):
            return subst(t.fn.body, t.arg)
        if isinstance(t, TraceElim):
            if isinstance(t.scrutinee, Nil):
                return t.base
            if isinstance(t.scrutinee, Step):
                return self._unfold_step(t, t.scrutinee, locals_)
        return None

    def reduce_step(self, t: Term, ctx: Optional[Context] = None) -> Optional[Term]:
        """
        One leftmost-outermost reduction step.

        Returns:
            The reduct, or None if ``t`` is normal
        """
        contracted = self._contract(t, ctx)
        if contracted is not None:
            return contracted
        if isinstance(t, Pi):
            reduced = self.reduce_step(t.domain, ctx)
            if reduced is not None:
                return Pi(reduced, t.codomain, t.name)
            inner = ctx.extend(t.name, t.domain) if ctx is not None else None
            reduced = self.reduce_step(t.codomain, inner)
            return None if reduced is None else Pi(t.domain, reduced, t.name)
        if isinstance(t, Lam):
            reduced = self.reduce_step(t.body, _under_binder(ctx, t.name))
            return None if reduced is None else Lam(reduced, t.name)
        fields = _REDUCIBLE_FIELDS.get(type(t), ())
        for position, name in enumerate(fields):
            reduced = self.reduce_step(getattr(t, name), ctx)
            if reduced is not None:
                values = [getattr(t, other) for other in fields]
                values[position] = reduced
                return type(t)(*values)
        return None

    # Corecursion

    def check_guardedness(self, decl: CorecDecl) -> None:
        """
        Accept ``head σ; tail (e, m)`` forms whose head and event mention no corecursive name.

        Raises:
            KernelError: UnguardedCorecursion, or a typing error in the head or event
        """
        if decl.head_state is None or decl.tail_event is None:
            raise KernelError(
                ErrorKind.UNGUARDED_CORECURSION,
                f"'{decl.name}' refers to '{decl.tail_ref}' outside a tail observation",
                span=decl.span,
            )
        for part in (decl.head_state, decl.tail_event):
            for sub in subterms(part):
                if isinstance(sub, CorecRef):
                    raise KernelError(
                        ErrorKind.UNGUARDED_CORECURSION,
                        f"'{decl.name}' mentions '{sub.name}' in its head or event",
                        span=decl.span,
                    )
        if decl.tail_ref not in self.corecs:
            raise KernelError(
                ErrorKind.UNKNOWN_CONSTANT, f"unknown corecursive definition '{decl.tail_ref}'", span=decl.span
            )
        self.check(EMPTY_CONTEXT, decl.head_state, StateTy())
        self.check(EMPTY_CONTEXT, decl.tail_event, EventTy())

    def observe_inftrace(self, name: str, depth: int) -> List[str]:
        """
        Unfold a corecursive trace ``depth`` times.

        Returns:
            Alternating state and event names, starting and ending with a state
        """
        if depth < 0:
            raise ValueError("observation depth must be non-negative")
        observed: List[str] = []
        current = name
        for unfold in range(depth + 1):
            decl = self.corecs.get(current)
            if decl is None:
                raise KernelError(ErrorKind.UNKNOWN_CONSTANT, f"unknown corecursive definition '{current}'")
            self.check_guardedness(decl)
            head = self.normalize(EMPTY_CONTEXT, decl.head_state).term
            if not isinstance(head, StateConst):
                raise InternalKernelError(f"head of '{current}' does not normalize to a state")
            observed.append(head.name)
            if unfold == depth:
                break
            event = self.normalize(EMPTY_CONTEXT, decl.tail_event).term
            if not isinstance(event, EventConst):
                raise InternalKernelError(f"tail event of '{current}' does not normalize to an event")
            observed.append(event.name)
            current = decl.tail_ref
        return observed


_REDUCIBLE_FIELDS: Dict[type, Tuple[str, ...]] = {
    App: ("fn", "arg"),
    Nil: ("state",),
    Step: ("prefix", "event", "witness"),
    TraceElim: ("motive", "base", "step_case", "scrutinee"),
    FinTraceTy: ("src", "dst"),
    StepTy: ("src", "event", "dst"),
    Succ: ("pred",),
}


def observe_inftrace(module: ModuleAST, name: str, depth: int) -> List[str]:
    return Kernel.from_module(module).observe_inftrace(name, depth)


@dataclass
class CheckedModule:
    """Outcome of checking every declaration of a module."""

    module: ModuleAST
    system: TransitionSystem
    kernel: Kernel
    diagnostics: List[Diagnostic] = field(default_factory=list)
    checked_defs: List[str] = field(default_factory=list)
    guarded_corecs: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    @property
    def presheaves(self) -> List[PresheafDecl]:
        return self.module.presheaves


def check_module(module: ModuleAST, fuel: Optional[int] = None) -> CheckedModule:
    """
    Check a module's transition system, definitions and corecursive declarations in order.

    Failures are collected as diagnostics; checking continues with the next declaration.
    """
    system = TransitionSystem.from_module(module)
    kernel = Kernel(system, {decl.name: decl for decl in module.corecs}, fuel)
    result = CheckedModule(module, system, kernel)

    try:
        validate_system(system)
    except TransitionError as exc:
        result.diagnostics.append(Diagnostic(kind="InvalidSystem", message=str(exc), file=module.file))
        return result

    for decl in module.declarations:
        if isinstance(decl, Def):
            try:
                kernel.infer_universe(EMPTY_CONTEXT, decl.type)
                kernel.check(EMPTY_CONTEXT, decl.body, decl.type)
            except KernelError as exc:
                exc.span = exc.span or decl.span
                result.diagnostics.append(exc.to_diagnostic(decl.name))
                log_with_context(logger, logging.WARNING, "Definition rejected", file=module.file, declaration=decl.name, kind=exc.kind.value)
                continue
            result.checked_defs.append(decl.name)
            logger.debug(f"Checked def {decl.name}")
        elif isinstance(decl, CorecDecl):
            try:
                kernel.check_guardedness(decl)
            except KernelError as exc:
                exc.span = exc.span or decl.span
                result.diagnostics.append(exc.to_diagnostic(decl.name))
                log_with_context(logger, logging.WARNING, "Corecursive definition rejected", file=module.file, declaration=decl.name, kind=exc.kind.value)
                continue
            result.guarded_corecs.append(decl.name)

    log_with_context(
        logger,
        logging.INFO,
        "Module checked",
        file=module.file,
        defs=len(result.checked_defs),
        corecs=len(result.guarded_corecs),
        errors=len(result.diagnostics),
    )
    return result
