"""
Executable metatheory: seeded well-typed term generation, the structural property
suites and a bounded search for closed inhabitants of a type.
"""

import logging
import random
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt

from .config import settings
from .kernel import InternalKernelError, Kernel, KernelError, motive_result, step_case_type
from .logging import log_with_context
from .parser import pretty_print
from .syntax import (
    EMPTY_CONTEXT,
    App,
    Bottom,
    Context,
    CorecRef,
    EventConst,
    EventTy,
    FinTraceTy,
    InfTraceTy,
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
    Term,
    TraceElim,
    Universe,
    Var,
    Zero,
    mentions_var,
    shift,
    subst,
    weaken,
)
from .transition import Transition, TransitionSystem, reachable, reify, witness_path
from .types import ConsistencyReport, PropertyFailure, PropertyReport

logger = logging.getLogger(__name__)

# Signature of the credential corpus: the fixed system for generation and consistency search.
CREDENTIAL_SYSTEM = TransitionSystem(
    states=("NoCred", "Valid", "Revoked"),
    events=("Issue", "Use", "Revoke"),
    steps=(
        Transition("NoCred", "Issue", "Valid", "w_issue"),
        Transition("Valid", "Use", "Valid", "w_use"),
        Transition("Valid", "Revoke", "Revoked", "w_revoke"),
        Transition("Revoked", "Issue", "Valid", "w_reissue"),
    ),
)

MAX_REDUCTION_CHAIN = 10_000


class GenerationDeadEnd(Exception):
    """The current generation attempt cannot complete; a fresh attempt is made."""


class GenerationExhausted(Exception):
    """Every generation attempt for one sample ran into a dead end."""


class GenConfig(BaseModel):
    """Seeded generator configuration. Identical configurations produce identical samples."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    seed: int = Field(default_factory=lambda: settings.META_SEED, ge=0, lt=2**64)
    max_term_size: int = Field(default_factory=lambda: settings.MAX_TERM_SIZE, gt=0, alias="maxTermSize")
    max_ctx_len: int = Field(default_factory=lambda: settings.MAX_CTX_LEN, gt=0, alias="maxCtxLen")
    iterations: int = Field(default_factory=lambda: settings.META_ITERATIONS, gt=0)


def _retrying() -> Retrying:
    return Retrying(
        stop=stop_after_attempt(settings.GENERATION_ATTEMPTS),
        retry=retry_if_exception_type(GenerationDeadEnd),
    )


class TermGenerator:
    """
    Top-down, typing-rule-directed generator.

    ``gen_check(ctx, A, size)`` picks a rule able to conclude ``A`` and generates its
    premises with the remaining size budget.
    """

    def __init__(self, kernel: Kernel, rng: random.Random) -> None:
        self.kernel = kernel
        self.rng = rng
        self.system = kernel.system

    # Helpers

    def whnf(self, ctx: Context, t: Term) -> Term:
        return self.kernel.whnf(ctx, t)

    def conv(self, ctx: Context, a: Term, b: Term) -> bool:
        return self.kernel.conv(ctx, a, b)

    def _vars_of(self, ctx: Context, target: Term) -> List[Term]:
        return [Var(i) for i in range(len(ctx)) if self.conv(ctx, ctx.lookup(i), target)]

    def _pick(self, options: Sequence[Callable[[], Term]]) -> Term:
        order = list(options)
        self.rng.shuffle(order)
        for option in order[:3]:
            try:
                return option()
            except GenerationDeadEnd:
                continue
        raise GenerationDeadEnd("no rule concludes the target")

    # Contexts and targets

    def gen_context(self, length: int) -> Context:
        ctx = EMPTY_CONTEXT
        for position in range(length):
            ctx = ctx.extend(f"x{position}", self.gen_check(ctx, Universe(Layer.UC, 0), self.rng.randint(1, 4)))
        return ctx

    def gen_target(self, ctx: Context) -> Term:
        states = [StateConst(s) for s in self.system.states]
        options: List[Term] = [NatTy(), StateTy(), NatTy(), Pi(NatTy(), NatTy(), "n"), Universe(Layer.UC, 0)]
        if states:
            options.append(FinTraceTy(self.rng.choice(states), self.rng.choice(states)))
            options.append(Pi(StateTy(), FinTraceTy(Var(0), Var(0)), "s"))
            options.append(StateTy())
        if self.system.events:
            options.append(EventTy())
        if self.system.steps:
            step = self.rng.choice(self.system.steps)
            options.append(StepTy(StateConst(step.src), EventConst(step.event), StateConst(step.dst)))
        options.extend(ctx.lookup(i) for i in range(len(ctx)))
        return self.rng.choice(options)

    # Checking-mode generation

    def gen_check(self, ctx: Context, target: Term, size: int) -> Term:
        if size <= 0:
            raise GenerationDeadEnd("size budget spent")
        target = self.whnf(ctx, target)
        options: List[Callable[[], Term]] = []

        variables = self._vars_of(ctx, target)
        if variables:
            options.append(lambda: self.rng.choice(variables))

        if isinstance(target, Pi):
            options.append(lambda: Lam(self.gen_check(ctx.extend(target.name, target.domain), target.codomain, size - 1), target.name))
            options.append(options[-1])
        else:
            if size >= 3:
                options.append(lambda: self._redex(ctx, target, size))
            applicable = self._applicable_vars(ctx, target)
            if applicable and size >= 2:
                options.append(lambda: self._apply_var(ctx, applicable, size))
            options.extend(self._rules_for(ctx, target, size))

        if not options:
            raise GenerationDeadEnd(f"nothing inhabits {type(target).__name__}")
        return self._pick(options)

    def _rules_for(self, ctx: Context, target: Term, size: int) -> List[Callable[[], Term]]:
        rules: List[Callable[[], Term]] = []
        if isinstance(target, NatTy):
            rules.append(lambda: Zero())
            if size >= 2:
                rules.append(lambda: Succ(self.gen_check(ctx, NatTy(), size - 1)))
            if size >= 6:
                rules.append(lambda: self._elim(ctx, size, Lam(Lam(NatTy(), "t"), "s")))
        elif isinstance(target, StateTy):
            if self.system.states:
                rules.append(lambda: StateConst(self.rng.choice(self.system.states)))
                rules.append(rules[-1])
            if size >= 6:
                rules.append(lambda: self._elim(ctx, size, Lam(Lam(StateTy(), "t"), "s")))
        elif isinstance(target, EventTy):
            if self.system.events:
                rules.append(lambda: EventConst(self.rng.choice(self.system.events)))
        elif isinstance(target, StepTy):
            rules.append(lambda: self._declared_witness(ctx, target))
        elif isinstance(target, FinTraceTy):
            if self.conv(ctx, target.src, target.dst):
                rules.append(lambda: Nil(target.src))
                rules.append(rules[-1])
            if size >= 5:
                rules.append(lambda: self._extend_trace(ctx, target, size))
                rules.append(rules[-1])
            if size >= 8:
                rules.append(lambda: self._copy_elim(ctx, target, size))
        elif isinstance(target, InfTraceTy):
            if self.kernel.corecs:
                rules.append(lambda: CorecRef(self.rng.choice(sorted(self.kernel.corecs))))
        elif isinstance(target, Universe):
            rules.extend(self._type_rules(ctx, target, size))
        return rules

    def _type_rules(self, ctx: Context, target: Universe, size: int) -> List[Callable[[], Term]]:
        rules: List[Callable[[], Term]] = []
        if target.layer is Layer.UC:
            if target.level == 0:
                rules.append(lambda: self.rng.choice([StateTy(), EventTy(), NatTy(), InfTraceTy()]))
                rules.append(rules[-1])
                if size >= 3:
                    rules.append(
                        lambda: FinTraceTy(
                            self.gen_check(ctx, StateTy(), 1 + (size - 3) // 2),
                            self.gen_check(ctx, StateTy(), 1 + (size - 3) // 2),
                        )
                    )
                if size >= 4:
                    rules.append(
                        lambda: StepTy(
                            self.gen_check(ctx, StateTy(), 1),
                            self.gen_check(ctx, EventTy(), 1),
                            self.gen_check(ctx, StateTy(), 1),
                        )
                    )
            else:
                rules.append(lambda: Universe(Layer.UC, target.level - 1))
        elif target.layer is Layer.TYPE:
            rules.append(lambda: Universe(Layer.PROP) if target.level == 0 else Universe(Layer.TYPE, target.level - 1))
        else:
            rules.append(lambda: Bottom())
        if size >= 3:
            rules.append(lambda: self._pi_type(ctx, target, size))
        return rules

    def _pi_type(self, ctx: Context, target: Universe, size: int) -> Term:
        domain_size = self.rng.randint(1, max(1, (size - 1) // 2))
        domain = self.gen_check(ctx, Universe(Layer.UC, 0), domain_size)
        name = self.rng.choice(["a", "b", "n"])
        codomain = self.gen_check(ctx.extend(name, domain), target, size - 1 - domain_size)
        return Pi(domain, codomain, name)

    def _redex(self, ctx: Context, target: Term, size: int) -> Term:
        arg_type = self.rng.choice([NatTy(), StateTy(), EventTy()])
        arg_size = self.rng.randint(1, size - 2)
        arg = self.gen_check(ctx, arg_type, arg_size)
        body = self.gen_check(ctx.extend("y", arg_type), shift(target, 1), size - 1 - arg_size)
        return App(Lam(body, "y"), arg)

    def _applicable_vars(self, ctx: Context, target: Term) -> List[Tuple[int, Pi]]:
        found = []
        for i in range(len(ctx)):
            fn_type = self.whnf(ctx, ctx.lookup(i))
            if isinstance(fn_type, Pi) and not mentions_var(fn_type.codomain, 0):
                if self.conv(ctx, shift(fn_type.codomain, -1), target):
                    found.append((i, fn_type))
        return found

    def _apply_var(self, ctx: Context, applicable: List[Tuple[int, Pi]], size: int) -> Term:
        index, fn_type = self.rng.choice(applicable)
        return App(Var(index), self.gen_check(ctx, fn_type.domain, size - 1))

    def _declared_witness(self, ctx: Context, target: StepTy) -> Term:
        src = self.kernel.normalize(ctx, target.src).term
        event = self.kernel.normalize(ctx, target.event).term
        dst = self.kernel.normalize(ctx, target.dst).term
        for step in self.system.steps:
            if (StateConst(step.src), EventConst(step.event), StateConst(step.dst)) == (src, event, dst):
                return StepWitness(step.witness)
        raise GenerationDeadEnd("no declared step matches")

    def _step_candidates(self, ctx: Context, dst: Term) -> List[Tuple[Term, Term, Term]]:
        """Witnesses ending at ``dst`` with their source and event."""
        candidates = []
        for step in self.system.steps:
            if self.conv(ctx, StateConst(step.dst), dst):
                candidates.append((StepWitness(step.witness), StateConst(step.src), EventConst(step.event)))
        for i in range(len(ctx)):
            witness_type = self.whnf(ctx, ctx.lookup(i))
            if isinstance(witness_type, StepTy) and self.conv(ctx, witness_type.dst, dst):
                candidates.append((Var(i), witness_type.src, witness_type.event))
        return candidates

    def _extend_trace(self, ctx: Context, target: FinTraceTy, size: int) -> Term:
        src = self.kernel.normalize(ctx, target.src).term
        candidates = self._step_candidates(ctx, target.dst)
        if isinstance(src, StateConst):
            candidates = [
                c for c in candidates
                if not isinstance(c[1], StateConst) or reachable(self.system, src.name, c[1].name)
            ]
        if not candidates:
            raise GenerationDeadEnd("no step reaches the trace target")
        witness, step_src, event = self.rng.choice(candidates)
        if isinstance(src, StateConst) and isinstance(step_src, StateConst) and self.rng.random() < 0.5:
            path = witness_path(self.system, src.name, step_src.name)
            if path is not None:
                return Step(reify(path), event, witness)
        prefix = self.gen_check(ctx, FinTraceTy(target.src, step_src), size - 3)
        return Step(prefix, event, witness)

    def _scrutinee(self, ctx: Context, size: int) -> Tuple[Term, Term]:
        """A trace term and its source state."""
        traces = []
        for i in range(len(ctx)):
            trace_type = self.whnf(ctx, ctx.lookup(i))
            if isinstance(trace_type, FinTraceTy):
                traces.append((Var(i), trace_type.src))
        if traces and self.rng.random() < 0.4:
            return self.rng.choice(traces)
        if not self.system.states:
            raise GenerationDeadEnd("no states to start a trace from")
        start = self.rng.choice(self.system.states)
        at, edges = start, []
        for _ in range(self.rng.randint(0, max(0, (size - 2) // 3))):
            steps = self.system.out_steps(at)
            if not steps:
                break
            step = self.rng.choice(steps)
            edges.append(step)
            at = step.dst
        term: Term = Nil(StateConst(start))
        for step in edges:
            term = Step(term, EventConst(step.event), StepWitness(step.witness))
        return term, StateConst(start)

    def _elim(self, ctx: Context, size: int, motive: Term) -> Term:
        scrutinee, source = self._scrutinee(ctx, size // 3)
        base = self.gen_check(ctx, motive_result(motive, source, Nil(source)), max(1, size // 4))
        step_case = self.gen_check(ctx, step_case_type(motive, source), max(7, size // 2))
        return TraceElim(motive, base, step_case, scrutinee)

    def _copy_elim(self, ctx: Context, target: FinTraceTy, size: int) -> Term:
        scrutinee = self.gen_check(ctx, target, size // 2)
        motive = Lam(Lam(FinTraceTy(shift(target.src, 2), Var(1)), "t"), "s")
        source = target.src
        step_case = self.gen_check(ctx, step_case_type(motive, source), max(10, size // 2))
        return TraceElim(motive, Nil(source), step_case, scrutinee)


def _generator(kernel: Kernel, seed: str) -> TermGenerator:
    return TermGenerator(kernel, random.Random(seed))


def _retry_generation(attempt: Callable[[], tuple], label: str) -> tuple:
    try:
        return _retrying()(attempt)
    except RetryError as exc:
        raise GenerationExhausted(f"{label}: {settings.GENERATION_ATTEMPTS} attempts hit dead ends") from exc


def generate_well_typed(
    cfg: GenConfig,
    i: int,
    kernel: Optional[Kernel] = None,
    min_ctx_len: int = 0,
    closed_base: bool = False,
) -> Tuple[Context, Term, Term]:
    """
    Generate the ``i``-th sample ``(ctx, t, A)`` with ``check(ctx, t, A)``.

    Args:
        cfg: Generator configuration
        i: Iteration index; samples depend only on ``cfg.seed`` and ``i``
        kernel: Kernel supplying the signature (credential system by default)
        min_ctx_len: Smallest context length to generate
        closed_base: Generate closed terms at Nat or a closed trace type only

    Raises:
        GenerationExhausted: if every attempt hit a dead end
    """
    kernel = kernel or Kernel(CREDENTIAL_SYSTEM)
    gen = _generator(kernel, f"{cfg.seed}/{i}")

    def attempt() -> Tuple[Context, Term, Term]:
        if closed_base:
            ctx = EMPTY_CONTEXT
            states = [StateConst(s) for s in kernel.system.states] or [None]
            src, dst = gen.rng.choice(states), gen.rng.choice(states)
            target = NatTy() if src is None or gen.rng.random() < 0.5 else FinTraceTy(src, dst)
        else:
            ctx = gen.gen_context(gen.rng.randint(min(min_ctx_len, cfg.max_ctx_len), cfg.max_ctx_len))
            target = gen.gen_target(ctx)
        term = gen.gen_check(ctx, target, gen.rng.randint(1, cfg.max_term_size))
        return ctx, term, target

    return _retry_generation(attempt, f"sample {i}")


def _show(ctx: Context, *terms: Term) -> str:
    bindings = ", ".join(
        f"{name} : {pretty_print(type_, ctx.names()[:position])}" for position, (name, type_) in enumerate(ctx.entries)
    )
    shown = " / ".join(pretty_print(t, ctx) for t in terms)
    return f"[{bindings}] |- {shown}"


def _weakening(cfg: GenConfig, i: int, kernel: Kernel) -> Optional[str]:
    ctx, t, a = generate_well_typed(cfg, i, kernel)
    gen = _generator(kernel, f"{cfg.seed}/{i}/weaken")
    extra = _retry_generation(lambda: (gen.gen_check(ctx, Universe(Layer.UC, 0), 3),), f"weakening {i}")[0]
    if kernel.accepts(ctx.extend("w", extra), weaken(t), weaken(a)):
        return None
    return _show(ctx.extend("w", extra), weaken(t), weaken(a))


def _substitution(cfg: GenConfig, i: int, kernel: Kernel) -> Optional[str]:
    ctx, t, b = generate_well_typed(cfg, i, kernel, min_ctx_len=1)
    outer = ctx.prefix(len(ctx) - 1)
    _, bound_type = ctx.entries[-1]
    gen = _generator(kernel, f"{cfg.seed}/{i}/subst")
    s = _retry_generation(lambda: (gen.gen_check(outer, bound_type, gen.rng.randint(1, 6)),), f"substitution {i}")[0]
    if kernel.accepts(outer, subst(t, s), subst(b, s)):
        return None
    return _show(outer, subst(t, s), subst(b, s)) + f" from {_show(ctx, t, b)}"


def _subject_reduction(cfg: GenConfig, i: int, kernel: Kernel) -> Optional[str]:
    ctx, t, a = generate_well_typed(cfg, i, kernel)
    current = t
    for _ in range(MAX_REDUCTION_CHAIN):
        reduct = kernel.reduce_step(current, ctx)
        if reduct is None:
            return None
        if not kernel.accepts(ctx, reduct, a):
            return f"{_show(ctx, current, a)} reduces to {pretty_print(reduct, ctx)}"
        current = reduct
    return f"{_show(ctx, t, a)} has a reduction chain longer than {MAX_REDUCTION_CHAIN}"


def _canonicity(cfg: GenConfig, i: int, kernel: Kernel) -> Optional[str]:
    ctx, t, a = generate_well_typed(cfg, i, kernel, closed_base=True)
    normal = kernel.normalize(ctx, t)
    heads = (Zero, Succ) if isinstance(a, NatTy) else (Nil, Step)
    if normal.is_canonical and isinstance(normal.term, heads):
        return None
    return f"{_show(ctx, t, a)} normalizes to {pretty_print(normal.term, ctx)}"


STRUCTURAL_PROPERTIES: Dict[str, Callable[[GenConfig, int, Kernel], Optional[str]]] = {
    "weakening": _weakening,
    "substitution": _substitution,
    "subject-reduction": _subject_reduction,
    "canonicity": _canonicity,
}


def run_property(name: str, cfg: GenConfig, kernel: Optional[Kernel] = None) -> PropertyReport:
    kernel = kernel or Kernel(CREDENTIAL_SYSTEM)
    check = STRUCTURAL_PROPERTIES[name]
    failures: List[PropertyFailure] = []
    for i in range(cfg.iterations):
        try:
            problem = check(cfg, i, kernel)
        except GenerationExhausted as exc:
            problem = f"generation exhausted: {exc}"
        except (KernelError, InternalKernelError) as exc:
            problem = f"kernel error: {exc}"
        if problem is not None:
            failures.append(PropertyFailure(seed_offset=i, counterexample=problem))
    log_with_context(logger, logging.INFO, "Property run", property=name, iterations=cfg.iterations, failures=len(failures))
    return PropertyReport(property=name, iterations=cfg.iterations, failures=failures)


def run_structural_suite(cfg: GenConfig, kernel: Optional[Kernel] = None) -> List[PropertyReport]:
    """Weakening, substitution, subject reduction and canonicity over ``cfg.iterations`` samples each."""
    kernel = kernel or Kernel(CREDENTIAL_SYSTEM)
    return [run_property(name, cfg, kernel) for name in STRUCTURAL_PROPERTIES]


# Bounded enumeration


_UNIVERSES = (
    Universe(Layer.UC, 0),
    Universe(Layer.UC, 1),
    Universe(Layer.TYPE, 0),
    Universe(Layer.TYPE, 1),
    Universe(Layer.PROP),
)
_BASE_TYPES = (StateTy(), EventTy(), NatTy(), InfTraceTy(), Bottom())


def _splits(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Ordered ways of writing ``total`` as ``parts`` positive sizes."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _splits(total - first, parts - 1):
            yield (first,) + rest


class TermEnumerator:
    """
    Typed bottom-up enumeration of terms by exact size.

    Inferable terms are enumerated per context; lambdas appear where they are checked
    against a function type or as the head of an applied redex. Universes are restricted
    to levels 0 and 1.
    """

    def __init__(self, kernel: Kernel) -> None:
        self.kernel = kernel
        self._inferable: Dict[Tuple[Tuple[Term, ...], int], List[Tuple[Term, Term]]] = {}
        self._checkable: Dict[Tuple[Tuple[Term, ...], int, Term], List[Term]] = {}

    def nf(self, ctx: Context, t: Term) -> Term:
        return self.kernel.normalize(ctx, t).term

    def _typed(self, ctx: Context, t: Term) -> Optional[Tuple[Term, Term]]:
        try:
            return t, self.nf(ctx, self.kernel.infer(ctx, t))
        except KernelError:
            return None

    def inferable(self, ctx: Context, size: int) -> List[Tuple[Term, Term]]:
        """Inferable terms of exactly ``size`` nodes with their normalized types."""
        key = (tuple(type_ for _, type_ in ctx.entries), size)
        if key not in self._inferable:
            self._inferable[key] = list(self._build(ctx, size))
        return self._inferable[key]

    def checkable(self, ctx: Context, size: int, target: Term) -> List[Term]:
        """Terms of exactly ``size`` nodes that check against the normalized ``target``."""
        key = (tuple(type_ for _, type_ in ctx.entries), size, target)
        if key not in self._checkable:
            found = [t for t, type_ in self.inferable(ctx, size) if type_ == target]
            if isinstance(target, Pi) and size >= 2:
                inner = ctx.extend(target.name, target.domain)
                found.extend(Lam(body, target.name) for body in self.checkable(inner, size - 1, target.codomain))
            self._checkable[key] = found
        return self._checkable[key]

    def _of_type(self, ctx: Context, size: int, wanted: type) -> List[Tuple[Term, Term]]:
        return [(t, type_) for t, type_ in self.inferable(ctx, size) if isinstance(type_, wanted)]

    def _leaves(self, ctx: Context) -> Iterator[Tuple[Term, Term]]:
        system = self.kernel.system
        leaves: List[Term] = [Var(i) for i in range(len(ctx))]
        leaves += list(_UNIVERSES) + list(_BASE_TYPES) + [Zero()]
        leaves += [StateConst(s) for s in system.states]
        leaves += [EventConst(e) for e in system.events]
        leaves += [StepWitness(step.witness) for step in system.steps]
        leaves += [CorecRef(name) for name in sorted(self.kernel.corecs)]
        for leaf in leaves:
            typed = self._typed(ctx, leaf)
            if typed is not None:
                yield typed

    def _build(self, ctx: Context, size: int) -> Iterator[Tuple[Term, Term]]:
        if size == 1:
            yield from self._leaves(ctx)
            return
        inner = size - 1
        for t, _ in self._of_type(ctx, inner, NatTy):
            yield Succ(t), NatTy()
        for t, _ in self._of_type(ctx, inner, StateTy):
            state = self.nf(ctx, t)
            yield Nil(t), FinTraceTy(state, state)
        yield from self._pis(ctx, inner)
        yield from self._applications(ctx, inner)
        yield from self._redexes(ctx, inner)
        for a_size, b_size in _splits(inner, 2):
            for a, _ in self._of_type(ctx, a_size, StateTy):
                for b, _ in self._of_type(ctx, b_size, StateTy):
                    yield FinTraceTy(a, b), Universe(Layer.UC, 0)
        for sizes in _splits(inner, 3):
            yield from self._triples(ctx, *sizes)
        if inner >= 4:
            yield from self._eliminations(ctx, inner)

    def _pis(self, ctx: Context, inner: int) -> Iterator[Tuple[Term, Term]]:
        for a_size, b_size in _splits(inner, 2):
            for domain, _ in self._of_type(ctx, a_size, Universe):
                body_ctx = ctx.extend("x", domain)
                for codomain, _ in self._of_type(body_ctx, b_size, Universe):
                    typed = self._typed(ctx, Pi(domain, codomain, "x"))
                    if typed is not None:
                        yield typed

    def _applications(self, ctx: Context, inner: int) -> Iterator[Tuple[Term, Term]]:
        for f_size, a_size in _splits(inner, 2):
            for fn, fn_type in self._of_type(ctx, f_size, Pi):
                for arg in self.checkable(ctx, a_size, fn_type.domain):
                    yield App(fn, arg), self.nf(ctx, subst(fn_type.codomain, arg))

    def _redexes(self, ctx: Context, inner: int) -> Iterator[Tuple[Term, Term]]:
        for lam_size, a_size in _splits(inner, 2):
            if lam_size < 2:
                continue
            for arg, arg_type in self.inferable(ctx, a_size):
                for body, body_type in self.inferable(ctx.extend("x", arg_type), lam_size - 1):
                    yield App(Lam(body, "x"), arg), self.nf(ctx, subst(body_type, arg))

    def _triples(self, ctx: Context, a_size: int, b_size: int, c_size: int) -> Iterator[Tuple[Term, Term]]:
        states_a = self._of_type(ctx, a_size, StateTy)
        events_b = self._of_type(ctx, b_size, EventTy)
        for a, _ in states_a:
            for e, _ in events_b:
                for c, _ in self._of_type(ctx, c_size, StateTy):
                    yield StepTy(a, e, c), Universe(Layer.UC, 0)
        for trace, trace_type in self._of_type(ctx, a_size, FinTraceTy):
            for event, _ in events_b:
                event_nf = self.nf(ctx, event)
                for witness, witness_type in self._of_type(ctx, c_size, StepTy):
                    if witness_type.src == trace_type.dst and witness_type.event == event_nf:
                        yield Step(trace, event, witness), FinTraceTy(trace_type.src, witness_type.dst)

    def _eliminations(self, ctx: Context, inner: int) -> Iterator[Tuple[Term, Term]]:
        for p_size, b_size, s_size, t_size in _splits(inner, 4):
            for scrutinee, scrutinee_type in self._of_type(ctx, t_size, FinTraceTy):
                source = scrutinee_type.src
                for universe in _UNIVERSES:
                    motive_type = self.nf(ctx, Pi(StateTy(), Pi(FinTraceTy(shift(source, 1), Var(0)), universe, "t"), "s"))
                    for motive in self.checkable(ctx, p_size, motive_type):
                        base_type = self.nf(ctx, motive_result(motive, source, Nil(source)))
                        bases = self.checkable(ctx, b_size, base_type)
                        if not bases:
                            continue
                        steps = self.checkable(ctx, s_size, self.nf(ctx, step_case_type(motive, source)))
                        for base in bases:
                            for step_case in steps:
                                typed = self._typed(ctx, TraceElim(motive, base, step_case, scrutinee))
                                if typed is not None:
                                    yield typed


def closed_term_census(max_size: int, system: Optional[TransitionSystem] = None) -> Dict[int, int]:
    """Number of closed inferable terms of each size up to ``max_size``."""
    enumerator = TermEnumerator(Kernel(system or CREDENTIAL_SYSTEM))
    return {size: len(enumerator.inferable(EMPTY_CONTEXT, size)) for size in range(1, max_size + 1)}


def consistency_search(
    max_size: int,
    system: Optional[TransitionSystem] = None,
    goal: Optional[Term] = None,
) -> Optional[Term]:
    """
    Search for a closed term of ``goal`` (default ``bot``) of at most ``max_size`` nodes.

    Every candidate found is re-checked by the kernel before it is returned.

    Raises:
        ValueError: if ``max_size`` exceeds settings.CONSISTENCY_SIZE_LIMIT
    """
    if max_size > settings.CONSISTENCY_SIZE_LIMIT:
        raise ValueError(f"consistency search is bounded by size {settings.CONSISTENCY_SIZE_LIMIT}")
    kernel = Kernel(system or CREDENTIAL_SYSTEM)
    goal = goal if goal is not None else Bottom()
    target = kernel.normalize(EMPTY_CONTEXT, goal).term
    enumerator = TermEnumerator(kernel)
    for size in range(1, max_size + 1):
        for candidate in enumerator.checkable(EMPTY_CONTEXT, size, target):
            if kernel.accepts(EMPTY_CONTEXT, candidate, goal):
                log_with_context(logger, logging.INFO, "Inhabitant found", goal=pretty_print(goal), size=size)
                return candidate
            logger.error(f"Enumerated candidate {pretty_print(candidate)} failed the kernel re-check")
    return None


def run_consistency(max_size: int, system: Optional[TransitionSystem] = None) -> ConsistencyReport:
    """Search ``bot`` and, as a control, ``Nat``."""
    inhabitant = consistency_search(max_size, system)
    control = consistency_search(max_size, system, NatTy())
    return ConsistencyReport(
        max_size=max_size,
        goal="bot",
        inhabitant=None if inhabitant is None else pretty_print(inhabitant),
        sanity_goal="Nat",
        sanity_inhabitant=None if control is None else pretty_print(control),
    )
