"""
Finite trace-indexed knowledge presheaves and restriction-surjectivity analysis.

A presheaf is tabulated over the traces of bounded length from a set of roots. Only the
restrictions along one-step extensions are stored; longer extensions compose them.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple, Union

from .config import settings
from .logging import log_with_context
from .transition import (
    ExtensionMorphism,
    Path,
    TransitionSystem,
    enumerate_traces,
    format_path,
)
from .types import LocalizationReport, NonMonotonicityReport, OrphanWitness

logger = logging.getLogger(__name__)

SUBSINGLETON = "∗"


class PresheafError(Exception):
    """Raised when a presheaf cannot be built, fails its laws or is queried outside its base."""


# Policies


@dataclass(frozen=True)
class Occurs:
    event: str

    def __str__(self) -> str:
        return f"occurs({self.event})"


@dataclass(frozen=True)
class CountAtLeast:
    event: str
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("count bounds are natural numbers")

    def __str__(self) -> str:
        return f"count({self.event}) >= {self.n}"


@dataclass(frozen=True)
class Not:
    expr: "PolicyExpr"

    def __str__(self) -> str:
        return f"not {_atom(self.expr)}"


@dataclass(frozen=True)
class And:
    left: "PolicyExpr"
    right: "PolicyExpr"

    def __str__(self) -> str:
        return f"{_operand(self.left, Or)} and {_operand(self.right, Or)}"


@dataclass(frozen=True)
class Or:
    left: "PolicyExpr"
    right: "PolicyExpr"

    def __str__(self) -> str:
        return f"{self.left} or {self.right}"


PolicyExpr = Union[Occurs, CountAtLeast, Not, And, Or]


def _atom(expr: "PolicyExpr") -> str:
    return str(expr) if isinstance(expr, (Occurs, CountAtLeast, Not)) else f"({expr})"


def _operand(expr: "PolicyExpr", looser: type) -> str:
    return f"({expr})" if isinstance(expr, looser) else str(expr)


def eval_policy(expr: PolicyExpr, path: Path) -> bool:
    """Evaluate a policy on the events of ``path``."""
    if isinstance(expr, Occurs):
        return expr.event in path.events
    if isinstance(expr, CountAtLeast):
        return path.events.count(expr.event) >= expr.n
    if isinstance(expr, Not):
        return not eval_policy(expr.expr, path)
    if isinstance(expr, And):
        return eval_policy(expr.left, path) and eval_policy(expr.right, path)
    if isinstance(expr, Or):
        return eval_policy(expr.left, path) or eval_policy(expr.right, path)
    raise TypeError(f"not a policy: {expr!r}")


def policy_events(expr: PolicyExpr) -> Set[str]:
    if isinstance(expr, (Occurs, CountAtLeast)):
        return {expr.event}
    if isinstance(expr, Not):
        return policy_events(expr.expr)
    return policy_events(expr.left) | policy_events(expr.right)


# Specifications


@dataclass(frozen=True)
class PredicateSpec:
    """Subsingleton presheaf: ``∗`` wherever the policy holds."""

    name: str
    expr: PolicyExpr
    roots: Tuple[str, ...] = ()
    depth: Optional[int] = None


@dataclass(frozen=True)
class EvidenceSpec:
    """Subsets of the issuance records that no later revocation has cancelled."""

    name: str
    issue_event: str
    revoke_event: str
    roots: Tuple[str, ...] = ()
    depth: Optional[int] = None


@dataclass(frozen=True)
class TabulatedSpec:
    """
    Explicit fibers and restriction tables.

    Traces absent from ``fibers`` have empty fibers. ``maps`` entries are
    ``(prefix, whole, ((k_whole, k_prefix), ...))``; one-step entries are the generators,
    other entries are checked against the composites of the generators.
    """

    name: str
    fibers: Tuple[Tuple[Path, FrozenSet[str]], ...] = ()
    maps: Tuple[Tuple[Path, Path, Tuple[Tuple[str, str], ...]], ...] = ()
    roots: Tuple[str, ...] = ()
    depth: Optional[int] = None


PresheafSpec = Union[PredicateSpec, EvidenceSpec, TabulatedSpec]


# Finite presheaves


@dataclass
class FinitePresheaf:
    name: str
    depth: int
    roots: Tuple[str, ...]
    base: List[Path]
    fibers: Dict[Path, FrozenSet[str]]
    restrictions: Dict[Path, Dict[str, str]] = field(default_factory=dict)
    composites: Dict[Tuple[Path, Path], Dict[str, str]] = field(default_factory=dict)

    def fiber(self, path: Path) -> FrozenSet[str]:
        try:
            return self.fibers[path]
        except KeyError:
            raise PresheafError(f"trace '{format_path(path)}' is outside the base of {self.name}") from None

    def restriction(self, extension: ExtensionMorphism) -> Dict[str, str]:
        """The stored table of a one-step extension."""
        if extension.length != 1:
            raise PresheafError(f"'{extension}' is not a one-step extension")
        self.fiber(extension.whole)
        return self.restrictions.get(extension.whole, {})

    def one_step_extensions(self) -> List[ExtensionMorphism]:
        return [ExtensionMorphism.one_step(path) for path in self.base if path.edges]


def evidence_records(path: Path, issue_event: str, revoke_event: str) -> FrozenSet[int]:
    """1-based positions of issuances with no later revocation on ``path``."""
    events = path.events
    return frozenset(
        position + 1
        for position, event in enumerate(events)
        if event == issue_event and revoke_event not in events[position + 1 :]
    )


def evidence_witness(records: Iterable[int]) -> str:
    return "{" + ",".join(f"rec@{index}" for index in sorted(records)) + "}"


def _subsets(records: FrozenSet[int]) -> List[FrozenSet[int]]:
    ordered = sorted(records)
    return [frozenset(combo) for size in range(len(ordered) + 1) for combo in combinations(ordered, size)]


def _require_events(system: TransitionSystem, events: Iterable[str], name: str) -> None:
    for event in events:
        if event not in system.events:
            raise PresheafError(f"presheaf {name} mentions undeclared event '{event}'")


def _build_predicate(presheaf: FinitePresheaf, spec: PredicateSpec) -> None:
    for path in presheaf.base:
        presheaf.fibers[path] = frozenset({SUBSINGLETON}) if eval_policy(spec.expr, path) else frozenset()
    for extension in presheaf.one_step_extensions():
        whole_fiber = presheaf.fibers[extension.whole]
        if whole_fiber and not presheaf.fibers[extension.prefix]:
            raise PresheafError(
                f"presheaf {spec.name}: {spec.expr} holds at '{format_path(extension.whole)}' but not at its "
                f"prefix '{format_path(extension.prefix)}', so no restriction exists"
            )
        presheaf.restrictions[extension.whole] = {SUBSINGLETON: SUBSINGLETON} if whole_fiber else {}


def _build_evidence(presheaf: FinitePresheaf, spec: EvidenceSpec) -> None:
    records = {path: evidence_records(path, spec.issue_event, spec.revoke_event) for path in presheaf.base}

    for path in presheaf.base:
        prefixes = path.prefixes()
        for i, earlier in enumerate(prefixes):
            for middle in prefixes[i + 1 : -1]:
                if not (records[earlier] & records[path]) <= records[middle]:
                    raise PresheafError(
                        f"presheaf {spec.name}: a record valid at '{format_path(earlier)}' and "
                        f"'{format_path(path)}' is invalid at '{format_path(middle)}'"
                    )

    for path in presheaf.base:
        presheaf.fibers[path] = frozenset(evidence_witness(subset) for subset in _subsets(records[path]))
    for extension in presheaf.one_step_extensions():
        kept = records[extension.prefix]
        presheaf.restrictions[extension.whole] = {
            evidence_witness(subset): evidence_witness(subset & kept) for subset in _subsets(records[extension.whole])
        }


def _build_tabulated(presheaf: FinitePresheaf, spec: TabulatedSpec) -> None:
    in_base = set(presheaf.base)
    for path in presheaf.base:
        presheaf.fibers[path] = frozenset()
    for path, witnesses in spec.fibers:
        if path not in in_base:
            raise PresheafError(f"presheaf {spec.name}: fiber over '{format_path(path)}' is outside the base")
        presheaf.fibers[path] = frozenset(witnesses)
    for prefix, whole, table in spec.maps:
        if whole not in in_base or prefix not in in_base:
            raise PresheafError(
                f"presheaf {spec.name}: table {format_path(whole)} => {format_path(prefix)} is outside the base"
            )
        if not prefix.is_prefix_of(whole):
            raise PresheafError(f"presheaf {spec.name}: '{format_path(prefix)}' is not a prefix of '{format_path(whole)}'")
        if len(whole) - len(prefix) == 1:
            presheaf.restrictions[whole] = dict(table)
        else:
            presheaf.composites[(prefix, whole)] = dict(table)


def build_presheaf(
    spec: PresheafSpec,
    system: TransitionSystem,
    roots: Optional[Iterable[str]] = None,
    depth: Optional[int] = None,
) -> FinitePresheaf:
    """
    Tabulate a presheaf over the traces of length at most ``depth`` from ``roots``.

    Args:
        spec: Presheaf declaration
        system: Validated transition system
        roots: Overrides the declared roots
        depth: Overrides the declared depth (falls back to settings.PRESHEAF_DEPTH)

    Raises:
        PresheafError: on undeclared events or states, a predicate that is not
            prefix-entailed, or an evidence record set that is not convex
    """
    root_list = tuple(roots) if roots is not None else spec.roots
    if not root_list:
        raise PresheafError(f"presheaf {spec.name} has no root states")
    bound = depth if depth is not None else (spec.depth if spec.depth is not None else settings.PRESHEAF_DEPTH)
    if bound < 1:
        raise PresheafError(f"presheaf {spec.name}: depth must be at least 1")
    for root in root_list:
        if root not in system.states:
            raise PresheafError(f"presheaf {spec.name}: unknown root state '{root}'")

    presheaf = FinitePresheaf(spec.name, bound, root_list, enumerate_traces(system, root_list, bound), {})
    if isinstance(spec, PredicateSpec):
        _require_events(system, policy_events(spec.expr), spec.name)
        _build_predicate(presheaf, spec)
    elif isinstance(spec, EvidenceSpec):
        _require_events(system, (spec.issue_event, spec.revoke_event), spec.name)
        _build_evidence(presheaf, spec)
    else:
        _build_tabulated(presheaf, spec)

    log_with_context(
        logger, logging.DEBUG, "Presheaf built", presheaf=spec.name, depth=bound, base=len(presheaf.base)
    )
    return presheaf


def _chain(presheaf: FinitePresheaf, prefix: Path, whole: Path) -> Dict[str, str]:
    table = {k: k for k in presheaf.fiber(whole)}
    for length in range(len(whole), len(prefix), -1):
        step = presheaf.restrictions.get(whole.prefix(length), {})
        table = {k: step[v] for k, v in table.items() if v in step}
    return table


def _table(presheaf: FinitePresheaf, prefix: Path, whole: Path) -> Dict[str, str]:
    explicit = presheaf.composites.get((prefix, whole))
    if explicit is not None:
        return explicit
    return _chain(presheaf, prefix, whole)


def validate_presheaf(presheaf: FinitePresheaf) -> None:
    """
    Check totality, identity and composition on the base.

    Raises:
        PresheafError: naming the failing extension or triple and the witness
    """
    for extension in presheaf.one_step_extensions():
        table = presheaf.restrictions.get(extension.whole, {})
        whole_fiber = presheaf.fiber(extension.whole)
        prefix_fiber = presheaf.fiber(extension.prefix)
        for k in sorted(whole_fiber):
            if k not in table:
                raise PresheafError(f"{presheaf.name}: restriction along '{extension}' is undefined at {k}")
            if table[k] not in prefix_fiber:
                raise PresheafError(
                    f"{presheaf.name}: restriction along '{extension}' sends {k} to {table[k]}, outside the prefix fiber"
                )
        extra = set(table) - whole_fiber
        if extra:
            raise PresheafError(f"{presheaf.name}: restriction along '{extension}' mentions {sorted(extra)[0]} outside the fiber")

    for (prefix, whole), table in presheaf.composites.items():
        for k in sorted(presheaf.fiber(whole)):
            if k not in table or table[k] not in presheaf.fiber(prefix):
                raise PresheafError(
                    f"{presheaf.name}: table {format_path(whole)} => {format_path(prefix)} is not total at {k}"
                )
        if prefix == whole:
            for k, image in sorted(table.items()):
                if image != k:
                    raise PresheafError(f"{presheaf.name}: identity at '{format_path(whole)}' sends {k} to {image}")

    for path in presheaf.base:
        prefixes = path.prefixes()
        for i, first in enumerate(prefixes):
            for middle in prefixes[i:]:
                outer = _table(presheaf, middle, path)
                inner = _table(presheaf, first, middle)
                direct = _table(presheaf, first, path)
                for k in sorted(presheaf.fiber(path)):
                    if direct.get(k) != inner.get(outer.get(k, ""), None):
                        raise PresheafError(
                            f"{presheaf.name}: composition fails on ({format_path(first)}, {format_path(middle)}, "
                            f"{format_path(path)}) at {k}"
                        )


def restrict(presheaf: FinitePresheaf, extension: ExtensionMorphism, witness: str) -> str:
    """
    Restrict a witness over ``extension.whole`` back to ``extension.prefix``.

    Raises:
        PresheafError: if the extension leaves the base or the witness is not in the fiber
    """
    if witness not in presheaf.fiber(extension.whole):
        raise PresheafError(f"{witness} is not in the fiber over '{format_path(extension.whole)}'")
    presheaf.fiber(extension.prefix)
    return _chain(presheaf, extension.prefix, extension.whole)[witness]


def check_surjective(presheaf: FinitePresheaf, extension: ExtensionMorphism) -> Tuple[bool, List[str]]:
    """
    Returns:
        Whether the one-step restriction is onto, and the prefix witnesses it misses
    """
    image = set(presheaf.restriction(extension).values())
    orphans = sorted(presheaf.fiber(extension.prefix) - image)
    return not orphans, orphans


def analyze_nonmonotonicity(presheaf: FinitePresheaf) -> NonMonotonicityReport:
    """Check every one-step extension of the base for surjectivity."""
    witnesses: List[OrphanWitness] = []
    for extension in presheaf.one_step_extensions():
        onto, orphans = check_surjective(presheaf, extension)
        if onto:
            continue
        last = extension.whole.edges[-1]
        for orphan in orphans:
            witnesses.append(
                OrphanWitness(
                    prefix=format_path(extension.prefix),
                    whole=format_path(extension.whole),
                    orphan=orphan,
                    event=last.event,
                    step=last.witness,
                    edge_index=len(extension.whole),
                )
            )

    report = NonMonotonicityReport(
        presheaf=presheaf.name,
        verdict="non-monotone" if witnesses else "monotone-on-base",
        witnesses=witnesses,
        prefix_stable=not witnesses,
        depth=presheaf.depth,
        roots=list(presheaf.roots),
        base_size=len(presheaf.base),
    )
    log_with_context(
        logger, logging.INFO, "Presheaf analysed", presheaf=presheaf.name, verdict=report.verdict, orphans=len(witnesses)
    )
    return report


def localize_index_shift(presheaf: FinitePresheaf, path: Path, witness: str, from_length: int = 0) -> Optional[int]:
    """
    First edge along ``path`` at which ``witness`` stops having a preimage.

    Args:
        presheaf: Validated presheaf whose base contains ``path``
        path: Trace to follow
        witness: Witness in the fiber over the prefix of length ``from_length``
        from_length: Length of the prefix carrying ``witness``

    Returns:
        The 1-based edge index, or None if the witness extends along the whole path
    """
    start = path.prefix(from_length)
    if witness not in presheaf.fiber(start):
        raise PresheafError(f"{witness} is not in the fiber over '{format_path(start)}'")
    presheaf.fiber(path)
    for length in range(from_length + 1, len(path) + 1):
        table = _chain(presheaf, start, path.prefix(length))
        if witness not in table.values():
            return length
    return None


def localize(presheaf: FinitePresheaf, path: Path, witness: str, from_length: int = 0) -> LocalizationReport:
    index = localize_index_shift(presheaf, path, witness, from_length)
    return LocalizationReport(
        presheaf=presheaf.name,
        path=format_path(path),
        witness=witness,
        from_length=from_length,
        edge_index=index,
        event=path.edges[index - 1].event if index is not None else None,
    )


def localize_orphans(presheaf: FinitePresheaf) -> List[LocalizationReport]:
    """
    Localize every orphan of a non-surjective one-step extension.

    Each orphan is followed from the shortest prefix of the extended trace whose witness of
    the same name restricts from it.
    """
    reports: List[LocalizationReport] = []
    for extension in presheaf.one_step_extensions():
        _, orphans = check_surjective(presheaf, extension)
        for orphan in orphans:
            start = len(extension.prefix)
            while start > 0:
                earlier = extension.whole.prefix(start - 1)
                if _chain(presheaf, earlier, extension.prefix).get(orphan) != orphan:
                    break
                start -= 1
            reports.append(localize(presheaf, extension.whole, orphan, start))
    return reports
