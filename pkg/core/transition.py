"""Transition systems and the free trace category they generate."""

import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from .syntax import EventConst, ModuleAST, Nil, StateConst, Step, StepWitness, Term, alpha_eq
from .types import AdequacyReport

if TYPE_CHECKING:
    from .kernel import Kernel as TraceChecker

logger = logging.getLogger(__name__)


class TransitionError(Exception):
    """Raised for ill-formed systems, unknown states and ill-formed paths."""


@dataclass(frozen=True)
class Transition:
    """One generating step ``src -[event]-> dst`` named by its witness."""

    src: str
    event: str
    dst: str
    witness: str

    def __str__(self) -> str:
        return f"{self.src} -[{self.event}/{self.witness}]-> {self.dst}"


@dataclass(frozen=True)
class TransitionSystem:
    states: Tuple[str, ...] = ()
    events: Tuple[str, ...] = ()
    steps: Tuple[Transition, ...] = ()

    @classmethod
    def from_module(cls, module: ModuleAST) -> "TransitionSystem":
        return cls(
            states=tuple(decl.name for decl in module.states),
            events=tuple(decl.name for decl in module.events),
            steps=tuple(
                Transition(decl.src, decl.event, decl.dst, decl.witness) for decl in module.steps
            ),
        )

    @cached_property
    def graph(self) -> nx.MultiDiGraph:
        """States as nodes, one keyed edge per witness, inserted in declaration order."""
        graph = nx.MultiDiGraph()
        graph.add_nodes_from(self.states)
        for index, step in enumerate(self.steps):
            graph.add_edge(step.src, step.dst, key=step.witness, event=step.event, index=index)
        return graph

    @cached_property
    def _by_witness(self) -> Dict[str, Transition]:
        return {step.witness: step for step in self.steps}

    @cached_property
    def _outgoing(self) -> Dict[str, List[Transition]]:
        outgoing: Dict[str, List[Transition]] = {state: [] for state in self.states}
        for step in self.steps:
            outgoing.setdefault(step.src, []).append(step)
        return outgoing

    def step(self, witness: str) -> Transition:
        try:
            return self._by_witness[witness]
        except KeyError:
            raise TransitionError(f"unknown step witness '{witness}'") from None

    def has_witness(self, witness: str) -> bool:
        return witness in self._by_witness

    def out_steps(self, state: str) -> List[Transition]:
        """Outgoing steps of ``state`` in declaration order."""
        return self._outgoing.get(state, [])

    def require_state(self, state: str) -> None:
        if state not in self.states:
            raise TransitionError(f"unknown state '{state}'")


def validate_system(system: TransitionSystem) -> None:
    """
    Check the declaration constraints of a transition system.

    Raises:
        TransitionError: naming the first violated constraint
    """
    seen_states = set()
    for state in system.states:
        if state in seen_states:
            raise TransitionError(f"state '{state}' declared twice")
        seen_states.add(state)
    seen_events = set()
    for event in system.events:
        if event in seen_events:
            raise TransitionError(f"event '{event}' declared twice")
        seen_events.add(event)

    witnesses = set()
    triples = set()
    for step in system.steps:
        if step.src not in seen_states:
            raise TransitionError(f"step '{step.witness}' references undeclared state '{step.src}'")
        if step.dst not in seen_states:
            raise TransitionError(f"step '{step.witness}' references undeclared state '{step.dst}'")
        if step.event not in seen_events:
            raise TransitionError(f"step '{step.witness}' references undeclared event '{step.event}'")
        if step.witness in witnesses:
            raise TransitionError(f"duplicate step witness '{step.witness}'")
        triple = (step.src, step.event, step.dst)
        if triple in triples:
            raise TransitionError(f"duplicate step {step.src} -[{step.event}]-> {step.dst} ('{step.witness}')")
        witnesses.add(step.witness)
        triples.add(triple)

    logger.debug(
        f"Validated system: {len(system.states)} states, {len(system.events)} events, {len(system.steps)} steps"
    )


@dataclass(frozen=True)
class Path:
    """A morphism of the free trace category."""

    src: str
    dst: str
    edges: Tuple[Transition, ...] = ()

    def __post_init__(self) -> None:
        at = self.src
        for edge in self.edges:
            if edge.src != at:
                raise TransitionError(f"edge {edge} does not start at {at}")
            at = edge.dst
        if at != self.dst:
            raise TransitionError(f"path from {self.src} ends at {at}, not {self.dst}")

    def __len__(self) -> int:
        return len(self.edges)

    def prefix(self, length: int) -> "Path":
        if not 0 <= length <= len(self.edges):
            raise TransitionError(f"no prefix of length {length} in a path of length {len(self)}")
        edges = self.edges[:length]
        return Path(self.src, edges[-1].dst if edges else self.src, edges)

    def prefixes(self) -> List["Path"]:
        """All prefixes, shortest first, ending with the path itself."""
        return [self.prefix(length) for length in range(len(self.edges) + 1)]

    def is_prefix_of(self, other: "Path") -> bool:
        return self.src == other.src and other.edges[: len(self.edges)] == self.edges

    @property
    def events(self) -> List[str]:
        return [edge.event for edge in self.edges]

    def __str__(self) -> str:
        return format_path(self)


@dataclass(frozen=True)
class ExtensionMorphism:
    """An extension ``prefix -> whole`` in the trace category."""

    prefix: Path
    whole: Path

    def __post_init__(self) -> None:
        if not self.prefix.is_prefix_of(self.whole):
            raise TransitionError(f"'{self.prefix}' is not a prefix of '{self.whole}'")

    @property
    def length(self) -> int:
        return len(self.whole) - len(self.prefix)

    @classmethod
    def one_step(cls, whole: Path) -> "ExtensionMorphism":
        if not whole.edges:
            raise TransitionError("the empty path has no one-step prefix")
        return cls(whole.prefix(len(whole) - 1), whole)

    def __str__(self) -> str:
        return f"{self.prefix} => {self.whole}"


def format_path(path: Path) -> str:
    """Render ``S0 -[E/w01]-> S1 -[F/w12]-> S2``."""
    parts = [path.src]
    for edge in path.edges:
        parts.append(f"-[{edge.event}/{edge.witness}]->")
        parts.append(edge.dst)
    return " ".join(parts)


def identity_path(state: str, system: Optional[TransitionSystem] = None) -> Path:
    if system is not None:
        system.require_state(state)
    return Path(state, state, ())


def single_step(step: Transition) -> Path:
    return Path(step.src, step.dst, (step,))


def concat(p: Path, q: Path) -> Path:
    """Compose paths in diagrammatic order."""
    if p.dst != q.src:
        raise TransitionError(f"cannot compose: '{p}' ends at {p.dst}, '{q}' starts at {q.src}")
    return Path(p.src, q.dst, p.edges + q.edges)


def reachable(system: TransitionSystem, s0: str, s1: str) -> bool:
    """Reflexive-transitive reachability over the transition graph."""
    system.require_state(s0)
    system.require_state(s1)
    return nx.has_path(system.graph, s0, s1)


def witness_path(system: TransitionSystem, s0: str, s1: str) -> Optional[Path]:
    """
    Shortest path from ``s0`` to ``s1``.

    Breadth-first; outgoing steps are explored in declaration order so the earliest declared
    first edge wins among equally short paths.

    Returns:
        The path, or None if ``s1`` is unreachable
    """
    system.require_state(s0)
    system.require_state(s1)
    parents: Dict[str, Optional[Transition]] = {s0: None}
    queue = deque([s0])
    while queue:
        state = queue.popleft()
        if state == s1:
            break
        for step in system.out_steps(state):
            if step.dst not in parents:
                parents[step.dst] = step
                queue.append(step.dst)
    if s1 not in parents:
        return None

    edges: List[Transition] = []
    at = s1
    while parents[at] is not None:
        step = parents[at]
        edges.append(step)
        at = step.src
    edges.reverse()
    return Path(s0, s1, tuple(edges))


def interp(t: Term, system: TransitionSystem) -> Path:
    """
    Interpret a closed normal trace term as a path.

    ``nil(σ)`` is the identity at σ and ``step(τ, e, π)`` is the interpretation of τ
    followed by the generating step π.

    Raises:
        TransitionError: if the term is not a closed normal trace over ``system``
    """
    if isinstance(t, Nil):
        if not isinstance(t.state, StateConst):
            raise TransitionError(f"nil over a non-constant state: {t}")
        return identity_path(t.state.name, system)
    if isinstance(t, Step):
        if not isinstance(t.witness, StepWitness) or not isinstance(t.event, EventConst):
            raise TransitionError(f"step with a non-constant event or witness: {t}")
        step = system.step(t.witness.name)
        if step.event != t.event.name:
            raise TransitionError(
                f"witness '{step.witness}' is labelled {step.event}, not {t.event.name}"
            )
        return concat(interp(t.prefix, system), single_step(step))
    raise TransitionError(f"not a closed normal trace term: {type(t).__name__}")


def reify(path: Path) -> Term:
    """The canonical trace term of a path."""
    term: Term = Nil(StateConst(path.src))
    for edge in path.edges:
        term = Step(term, EventConst(edge.event), StepWitness(edge.witness))
    return term


def _ordered_roots(system: TransitionSystem, roots: Iterable[str]) -> List[str]:
    wanted = set()
    for root in roots:
        system.require_state(root)
        wanted.add(root)
    return [state for state in system.states if state in wanted]


def enumerate_traces(system: TransitionSystem, roots: Iterable[str], max_len: int) -> List[Path]:
    """
    All paths from any root of length at most ``max_len``.

    Ordered by length, then lexicographically by step declaration index (roots in
    declaration order for the empty paths).
    """
    if max_len < 0:
        raise TransitionError("max_len must be non-negative")
    level = [identity_path(root) for root in _ordered_roots(system, roots)]
    paths = list(level)
    for _ in range(max_len):
        level = [
            Path(path.src, step.dst, path.edges + (step,))
            for path in level
            for step in system.out_steps(path.dst)
        ]
        if not level:
            break
        paths.extend(level)
    return paths


def enumerate_trace_terms(system: TransitionSystem, roots: Iterable[str], max_len: int) -> List[Term]:
    """Closed normal trace terms of length at most ``max_len``, built at the term level."""
    level: List[Tuple[Term, str]] = [(Nil(StateConst(root)), root) for root in _ordered_roots(system, roots)]
    terms = [term for term, _ in level]
    for _ in range(max_len):
        level = [
            (Step(term, EventConst(step.event), StepWitness(step.witness)), step.dst)
            for term, at in level
            for step in system.out_steps(at)
        ]
        terms.extend(term for term, _ in level)
    return terms


def paths_between(paths: Sequence[Path]) -> Dict[Tuple[str, str], int]:
    """Count paths per endpoint pair."""
    counts: Dict[Tuple[str, str], int] = {}
    for path in paths:
        counts[(path.src, path.dst)] = counts.get((path.src, path.dst), 0) + 1
    return counts


def check_completeness(system: TransitionSystem, kernel: "TraceChecker") -> List[str]:
    """
    Cross-check reachability, witness search and trace typing on every ordered state pair.

    Args:
        system: Validated transition system
        kernel: Anything with ``accepts_trace(term, src, dst) -> bool``

    Returns:
        One message per state pair on which the three verdicts disagree
    """
    disagreements: List[str] = []
    for s0 in system.states:
        for s1 in system.states:
            is_reachable = reachable(system, s0, s1)
            path = witness_path(system, s0, s1)
            typed = path is not None and kernel.accepts_trace(reify(path), s0, s1)
            if not (is_reachable == (path is not None) == typed):
                disagreements.append(
                    f"{s0} -> {s1}: reachable={is_reachable} witness={path is not None} typed={typed}"
                )
    logger.debug(f"Completeness check over {len(system.states) ** 2} state pairs: {len(disagreements)} disagreements")
    return disagreements


def check_adequacy(system: TransitionSystem, kernel: "TraceChecker", max_len: int, term_len: int) -> AdequacyReport:
    """
    Round-trip paths and closed trace terms through ``reify`` and ``interp``.

    Every path up to ``max_len`` must satisfy ``interp(reify(p)) == p`` with ``reify(p)``
    typed at its endpoints; every closed normal trace term up to ``term_len`` must satisfy
    ``reify(interp(t))`` alpha-equivalent to ``t``. The completeness cross-check runs on
    every ordered state pair.
    """
    failures: List[str] = []
    paths = enumerate_traces(system, system.states, max_len)
    for path in paths:
        term = reify(path)
        if interp(term, system) != path:
            failures.append(f"interp(reify(p)) differs from p = {format_path(path)}")
        elif not kernel.accepts_trace(term, path.src, path.dst):
            failures.append(f"reify(p) is ill-typed for p = {format_path(path)}")

    terms = enumerate_trace_terms(system, system.states, term_len)
    for term in terms:
        try:
            back = reify(interp(term, system))
        except TransitionError as exc:
            failures.append(f"interp rejected a closed normal trace term: {exc}")
            continue
        if not alpha_eq(back, term):
            failures.append(f"reify(interp(t)) differs from t = {term}")

    report = AdequacyReport(
        max_len=max_len,
        term_len=term_len,
        paths=len(paths),
        connected_pairs=len(paths_between(paths)),
        terms=len(terms),
        failures=failures,
        completeness=check_completeness(system, kernel),
    )
    logger.info(f"Adequacy over {len(paths)} paths and {len(terms)} terms: {len(failures)} failures")
    return report
