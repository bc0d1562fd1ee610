"""Abstract syntax of the DEKL core language, contexts and module declarations."""

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable, Dict, Iterator, List, Optional, Tuple, Union

if TYPE_CHECKING:
    from .presheaf import PolicyExpr, PresheafSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SourceSpan:
    """A 1-based region of a source file."""

    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self) -> None:
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ValueError(f"span starts after it ends: {self}")

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


class Layer(str, Enum):
    """Universe hierarchies: computational, knowledge and propositions."""

    UC = "Uc"
    TYPE = "Type"
    PROP = "Prop"


@dataclass(frozen=True)
class Term:
    """Base class of core terms. Bound variables are de Bruijn indices."""


@dataclass(frozen=True)
class Var(Term):
    index: int


@dataclass(frozen=True)
class Universe(Term):
    layer: Layer
    level: int = 0

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ValueError("universe levels are natural numbers")
        if self.layer is Layer.PROP and self.level != 0:
            raise ValueError("Prop carries no level")


@dataclass(frozen=True)
class Pi(Term):
    domain: Term
    codomain: Term
    name: str = field(default="x", compare=False)


@dataclass(frozen=True)
class Lam(Term):
    body: Term
    name: str = field(default="x", compare=False)


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class StateConst(Term):
    name: str


@dataclass(frozen=True)
class EventConst(Term):
    name: str


@dataclass(frozen=True)
class StepWitness(Term):
    name: str


@dataclass(frozen=True)
class Nil(Term):
    state: Term


@dataclass(frozen=True)
class Step(Term):
    prefix: Term
    event: Term
    witness: Term


@dataclass(frozen=True)
class TraceElim(Term):
    motive: Term
    base: Term
    step_case: Term
    scrutinee: Term


@dataclass(frozen=True)
class FinTraceTy(Term):
    src: Term
    dst: Term


@dataclass(frozen=True)
class StepTy(Term):
    src: Term
    event: Term
    dst: Term


@dataclass(frozen=True)
class StateTy(Term):
    pass


@dataclass(frozen=True)
class EventTy(Term):
    pass


@dataclass(frozen=True)
class NatTy(Term):
    pass


@dataclass(frozen=True)
class Zero(Term):
    pass


@dataclass(frozen=True)
class Succ(Term):
    pred: Term


@dataclass(frozen=True)
class InfTraceTy(Term):
    pass


@dataclass(frozen=True)
class CorecRef(Term):
    name: str


@dataclass(frozen=True)
class Bottom(Term):
    pass


# Term-valued fields of each constructor with the number of variables each binds.
TERM_FIELDS: Dict[type, Tuple[Tuple[str, int], ...]] = {
    Pi: (("domain", 0), ("codomain", 1)),
    Lam: (("body", 1),),
    App: (("fn", 0), ("arg", 0)),
    Nil: (("state", 0),),
    Step: (("prefix", 0), ("event", 0), ("witness", 0)),
    TraceElim: (("motive", 0), ("base", 0), ("step_case", 0), ("scrutinee", 0)),
    FinTraceTy: (("src", 0), ("dst", 0)),
    StepTy: (("src", 0), ("event", 0), ("dst", 0)),
    Succ: (("pred", 0),),
}


def children(t: Term) -> Iterator[Tuple[Term, int]]:
    """Yield each direct subterm together with the binders it sits under."""
    for name, binds in TERM_FIELDS.get(type(t), ()):
        yield getattr(t, name), binds


def map_children(t: Term, fn: Callable[[Term, int], Term]) -> Term:
    """Rebuild ``t`` with ``fn(child, binders)`` applied to every direct subterm."""
    spec = TERM_FIELDS.get(type(t))
    if not spec:
        return t
    return dataclasses.replace(t, **{name: fn(getattr(t, name), binds) for name, binds in spec})


def shift(t: Term, by: int, cutoff: int = 0) -> Term:
    """Add ``by`` to every free index of ``t`` that is at least ``cutoff``."""
    if isinstance(t, Var):
        if t.index < cutoff:
            return t
        if t.index + by < 0:
            raise ValueError(f"shift would make index {t.index} negative")
        return Var(t.index + by)
    if type(t) not in TERM_FIELDS:
        return t
    return map_children(t, lambda child, binds: shift(child, by, cutoff + binds))


def weaken(t: Term, at: int = 0) -> Term:
    """
    Make room for a new variable at depth ``at``.

    Args:
        t: Term scope-valid at some depth d
        at: Position of the inserted variable (0 = innermost)

    Returns:
        The term, scope-valid at depth d + 1
    """
    return shift(t, 1, at)


def _replace(t: Term, index: int, value: Term) -> Term:
    if isinstance(t, Var):
        return value if t.index == index else t
    if type(t) not in TERM_FIELDS:
        return t
    return map_children(
        t,
        lambda child, binds: _replace(child, index + binds, shift(value, binds)) if binds else _replace(child, index, value),
    )


def subst(body: Term, value: Term) -> Term:
    """
    Instantiate the variable bound by a binder with ``value``.

    Args:
        body: The body of a binder; index 0 refers to the bound variable
        value: Replacement, scope-valid outside the binder

    Returns:
        The capture-avoiding instance, scope-valid outside the binder
    """
    return shift(_replace(body, 0, shift(value, 1)), -1)


def alpha_eq(t: Term, u: Term) -> bool:
    """Identity up to bound-variable renaming. Name hints never take part in equality."""
    return t == u


def free_indices(t: Term, depth: int = 0) -> List[int]:
    """Free de Bruijn indices of ``t`` relative to the enclosing scope."""
    if isinstance(t, Var):
        return [t.index - depth] if t.index >= depth else []
    found: List[int] = []
    for child, binds in children(t):
        found.extend(free_indices(child, depth + binds))
    return found


def scope_valid(t: Term, depth: int) -> bool:
    """Whether every free index of ``t`` refers to one of ``depth`` enclosing binders."""
    return all(index < depth for index in free_indices(t))


def mentions_var(t: Term, index: int) -> bool:
    return index in free_indices(t)


def term_size(t: Term) -> int:
    """Number of AST nodes."""
    return 1 + sum(term_size(child) for child, _ in children(t))


def spine(t: Term) -> Tuple[Term, List[Term]]:
    """Split an application chain into its head and arguments."""
    args: List[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def apply(head: Term, *args: Term) -> Term:
    for arg in args:
        head = App(head, arg)
    return head


def is_neutral(t: Term) -> bool:
    """A normal term whose head is stuck on a variable or on a stuck eliminator."""
    head, _ = spine(t)
    return isinstance(head, (Var, TraceElim))


def subterms(t: Term) -> Iterator[Term]:
    yield t
    for child, _ in children(t):
        yield from subterms(child)


@dataclass(frozen=True)
class Context:
    """A typing telescope; the last entry is the innermost variable (index 0)."""

    entries: Tuple[Tuple[str, Term], ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def extend(self, name: str, type_: Term) -> "Context":
        return Context(self.entries + ((name, type_),))

    def lookup(self, index: int) -> Term:
        """Type of ``Var(index)``, shifted into the full context."""
        if not 0 <= index < len(self.entries):
            raise IndexError(index)
        _, type_ = self.entries[len(self.entries) - 1 - index]
        return shift(type_, index + 1)

    def names(self) -> List[str]:
        return [name for name, _ in self.entries]

    def prefix(self, length: int) -> "Context":
        return Context(self.entries[:length])


EMPTY_CONTEXT = Context()


# Module declarations


@dataclass(frozen=True)
class StateDecl:
    name: str
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class EventDecl:
    name: str
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class StepDecl:
    src: str
    event: str
    dst: str
    witness: str
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Def:
    name: str
    type: Term
    body: Term
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class PolicyDecl:
    name: str
    expr: "PolicyExpr"
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class PresheafDecl:
    spec: "PresheafSpec"
    span: Optional[SourceSpan] = field(default=None, compare=False)

    @property
    def name(self) -> str:
        return self.spec.name


@dataclass(frozen=True)
class CorecDecl:
    """``corec n := head σ; tail (e, m).`` or the bare alias form ``corec n := m.``"""

    name: str
    head_state: Optional[Term]
    tail_event: Optional[Term]
    tail_ref: str
    span: Optional[SourceSpan] = field(default=None, compare=False)


Declaration = Union[StateDecl, EventDecl, StepDecl, Def, PolicyDecl, PresheafDecl, CorecDecl]


@dataclass(frozen=True)
class ModuleAST:
    declarations: Tuple[Declaration, ...]
    file: str = field(default="<input>", compare=False)

    def _of(self, kind: type) -> list:
        return [decl for decl in self.declarations if isinstance(decl, kind)]

    @property
    def states(self) -> List[StateDecl]:
        return self._of(StateDecl)

    @property
    def events(self) -> List[EventDecl]:
        return self._of(EventDecl)

    @property
    def steps(self) -> List[StepDecl]:
        return self._of(StepDecl)

    @property
    def defs(self) -> List[Def]:
        return self._of(Def)

    @property
    def corecs(self) -> List[CorecDecl]:
        return self._of(CorecDecl)

    @property
    def presheaves(self) -> List[PresheafDecl]:
        return self._of(PresheafDecl)

    def corec(self, name: str) -> Optional[CorecDecl]:
        for decl in self.corecs:
            if decl.name == name:
                return decl
        return None
