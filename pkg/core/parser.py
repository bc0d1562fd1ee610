"""Recursive-descent parser and pretty-printer for ``.dekl`` modules."""

import dataclasses
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from .presheaf import (
    And,
    CountAtLeast,
    EvidenceSpec,
    Not,
    Occurs,
    Or,
    PolicyExpr,
    PredicateSpec,
    PresheafSpec,
    TabulatedSpec,
)
from .syntax import (
    App,
    Bottom,
    Context,
    CorecDecl,
    CorecRef,
    Declaration,
    Def,
    EventConst,
    EventDecl,
    EventTy,
    FinTraceTy,
    InfTraceTy,
    Lam,
    Layer,
    ModuleAST,
    NatTy,
    Nil,
    Pi,
    PolicyDecl,
    PresheafDecl,
    SourceSpan,
    StateConst,
    StateDecl,
    StateTy,
    Step,
    StepDecl,
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
    subterms,
)
from .transition import Path, Transition, TransitionError

logger = logging.getLogger(__name__)

KEYWORDS = frozenset(
    {
        "state", "event", "step", "as", "def", "presheaf", "policy", "corec", "head", "tail",
        "Prop", "Type", "Uc", "FinTrace", "InfTrace", "Step", "State", "Event", "Nat",
        "nil", "trace_elim", "bot", "zero", "succ", "fun",
        "predicate", "evidence", "table", "issue", "revoke", "from", "depth", "fiber", "restrict",
        "occurs", "count", "not", "and", "or",
    }
)

IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
NUMBER = re.compile(r"[0-9]+")
# Longest symbols first.
SYMBOLS = ("]->", "-[", "->", "=>", ":=", ">=", ":", ".", ",", ";", "(", ")", "[", "]", "{", "}", "=")


class ParseError(Exception):
    """A syntax or name-resolution error at a source position."""

    def __init__(self, span: SourceSpan, message: str, expected: Sequence[str] = (), found: str = "") -> None:
        super().__init__(message)
        self.span = span
        self.message = message
        self.expected = list(expected)
        self.found = found

    def __str__(self) -> str:
        return f"{self.span}: {self.message}"


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "number", "symbol" or "eof"
    text: str
    line: int
    col: int

    def span(self, file: str, end: Optional["Token"] = None) -> SourceSpan:
        last = end or self
        return SourceSpan(file, self.line, self.col, last.line, last.col + max(len(last.text), 1) - 1)

    def describe(self) -> str:
        return "end of input" if self.kind == "eof" else f"'{self.text}'"


def tokenize(text: str, file: str = "<input>") -> List[Token]:
    """
    Split source text into tokens, dropping whitespace and ``--`` comments.

    Raises:
        ParseError: on characters outside the ASCII token set
    """
    tokens: List[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        char = text[pos]
        if char == "\n":
            line, col, pos = line + 1, 1, pos + 1
            continue
        if char in " \t\r":
            col, pos = col + 1, pos + 1
            continue
        if text.startswith("--", pos):
            end = text.find("\n", pos)
            end = len(text) if end == -1 else end
            col, pos = col + (end - pos), end
            continue

        match = IDENTIFIER.match(text, pos) or NUMBER.match(text, pos)
        if match:
            kind = "ident" if IDENTIFIER.match(text, pos) else "number"
            tokens.append(Token(kind, match.group(), line, col))
            col, pos = col + len(match.group()), match.end()
            continue
        symbol = next((s for s in SYMBOLS if text.startswith(s, pos)), None)
        if symbol is None:
            span = SourceSpan(file, line, col, line, col)
            raise ParseError(span, f"unexpected character {char!r}", found=char)
        tokens.append(Token("symbol", symbol, line, col))
        col, pos = col + len(symbol), pos + len(symbol)
    tokens.append(Token("eof", "", line, col))
    return tokens


@dataclass
class Scope:
    """Global names visible at a use site, in resolution order after bound variables."""

    defs: Dict[str, Term] = field(default_factory=dict)
    states: Set[str] = field(default_factory=set)
    events: Set[str] = field(default_factory=set)
    witnesses: Dict[str, Transition] = field(default_factory=dict)
    corecs: Set[str] = field(default_factory=set)
    policies: Dict[str, PolicyExpr] = field(default_factory=dict)

    @classmethod
    def of_module(cls, module: ModuleAST) -> "Scope":
        scope = cls()
        for decl in module.declarations:
            if isinstance(decl, StateDecl):
                scope.states.add(decl.name)
            elif isinstance(decl, EventDecl):
                scope.events.add(decl.name)
            elif isinstance(decl, StepDecl):
                scope.witnesses[decl.witness] = Transition(decl.src, decl.event, decl.dst, decl.witness)
            elif isinstance(decl, Def):
                scope.defs[decl.name] = decl.body
            elif isinstance(decl, CorecDecl):
                scope.corecs.add(decl.name)
            elif isinstance(decl, PolicyDecl):
                scope.policies[decl.name] = decl.expr
        return scope

    def taken(self, name: str) -> bool:
        return (
            name in self.defs
            or name in self.states
            or name in self.events
            or name in self.witnesses
            or name in self.corecs
            or name in self.policies
        )


class Parser:
    def __init__(self, text: str, file: str = "<input>", scope: Optional[Scope] = None) -> None:
        self.file = file
        self.tokens = tokenize(text, file)
        self.pos = 0
        self.scope = scope or Scope()
        self.pending_tails: List[Tuple[str, Token]] = []

    # Token helpers

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.current.kind in ("symbol", "ident") and self.current.text == text

    def advance(self) -> Token:
        token = self.current
        if token.kind != "eof":
            self.pos += 1
        return token

    def error(self, expected: Sequence[str], token: Optional[Token] = None, message: Optional[str] = None) -> ParseError:
        token = token or self.current
        text = message or f"expected {' or '.join(expected)}, found {token.describe()}"
        return ParseError(token.span(self.file), text, expected, token.text)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error([f"'{text}'"])
        return self.advance()

    def identifier(self, what: str = "identifier") -> Token:
        token = self.current
        if token.kind != "ident" or token.text in KEYWORDS:
            raise self.error([what])
        return self.advance()

    def number(self) -> int:
        if self.current.kind != "number":
            raise self.error(["number"])
        return int(self.advance().text)

    # Modules

    def parse_module(self) -> ModuleAST:
        declarations: List[Declaration] = []
        while self.current.kind != "eof":
            declarations.append(self.declaration())
        for name, token in self.pending_tails:
            if name not in self.scope.corecs:
                raise self.error(["corecursive name"], token, f"unknown corecursive definition '{name}'")
        logger.debug(f"Parsed {len(declarations)} declarations from {self.file}")
        return ModuleAST(tuple(declarations), self.file)

    def declare(self, token: Token) -> str:
        if self.scope.taken(token.text):
            raise self.error([], token, f"'{token.text}' is already declared")
        return token.text

    def declaration(self) -> Declaration:
        start = self.current
        keyword = start.text if start.kind == "ident" else ""
        handler = {
            "state": self.state_decl,
            "event": self.event_decl,
            "step": self.step_decl,
            "def": self.def_decl,
            "policy": self.policy_decl,
            "presheaf": self.presheaf_decl,
            "corec": self.corec_decl,
        }.get(keyword)
        if handler is None:
            raise self.error(["declaration"])
        self.advance()
        decl = handler()
        end = self.expect(".")
        span = start.span(self.file, end)
        return dataclasses.replace(decl, span=span)

    def state_decl(self) -> StateDecl:
        name = self.declare(self.identifier("state name"))
        self.scope.states.add(name)
        return StateDecl(name)

    def event_decl(self) -> EventDecl:
        name = self.declare(self.identifier("event name"))
        self.scope.events.add(name)
        return EventDecl(name)

    def _known(self, names: Iterable[str], token: Token, what: str) -> str:
        if token.text not in names:
            raise self.error([what], token, f"unknown {what} '{token.text}'")
        return token.text

    def step_decl(self) -> StepDecl:
        src = self._known(self.scope.states, self.identifier("state"), "state")
        self.expect("-[")
        event = self._known(self.scope.events, self.identifier("event"), "event")
        self.expect("]->")
        dst = self._known(self.scope.states, self.identifier("state"), "state")
        self.expect("as")
        witness = self.declare(self.identifier("step witness name"))
        self.scope.witnesses[witness] = Transition(src, event, dst, witness)
        return StepDecl(src, event, dst, witness)

    def def_decl(self) -> Def:
        name_token = self.identifier("definition name")
        name = self.declare(name_token)
        self.expect(":")
        type_ = self.term([])
        self.expect(":=")
        body = self.term([])
        self.scope.defs[name] = body
        return Def(name, type_, body)

    def policy_decl(self) -> PolicyDecl:
        name = self.declare(self.identifier("policy name"))
        self.expect(":=")
        expr = self.policy()
        self.scope.policies[name] = expr
        return PolicyDecl(name, expr)

    def corec_decl(self) -> CorecDecl:
        name = self.declare(self.identifier("corecursive name"))
        self.expect(":=")
        self.scope.corecs.add(name)
        if self.at("head"):
            self.advance()
            head = self.term([])
            self.expect(";")
            self.expect("tail")
            self.expect("(")
            event = self.term([])
            self.expect(",")
            tail = self.identifier("corecursive name")
            self.expect(")")
            self.pending_tails.append((tail.text, tail))
            return CorecDecl(name, head, event, tail.text)
        tail = self.identifier("'head' or corecursive name")
        self.pending_tails.append((tail.text, tail))
        return CorecDecl(name, None, None, tail.text)

    # Terms

    def term(self, bound: List[str]) -> Term:
        if self.at("fun"):
            self.advance()
            name = self.binder(bound)
            self.expect("=>")
            return Lam(self.term(bound + [name]), name)
        if self.at("(") and self.peek().kind == "ident" and self.peek(2).text == ":":
            self.advance()
            name = self.binder(bound)
            self.expect(":")
            domain = self.term(bound)
            self.expect(")")
            self.expect("->")
            return Pi(domain, self.term(bound + [name]), name)
        left = self.application(bound)
        if self.at("->"):
            self.advance()
            return Pi(left, shift(self.term(bound), 1), "_")
        return left

    def binder(self, bound: List[str]) -> str:
        token = self.identifier("binder name")
        if token.text in bound:
            raise self.error([], token, f"binder '{token.text}' shadows a bound variable")
        return token.text

    def application(self, bound: List[str]) -> Term:
        head = self.atom(bound)
        while self._starts_atom():
            head = App(head, self.atom(bound))
        return head

    def _starts_atom(self) -> bool:
        token = self.current
        if token.kind == "symbol":
            return token.text == "("
        if token.kind != "ident":
            return False
        return token.text not in KEYWORDS or token.text in _ATOM_KEYWORDS

    def _args(self, bound: List[str], count: int) -> List[Term]:
        self.expect("(")
        args = [self.term(bound)]
        for _ in range(count - 1):
            self.expect(",")
            args.append(self.term(bound))
        self.expect(")")
        return args

    def atom(self, bound: List[str]) -> Term:
        token = self.current
        if token.kind == "symbol" and token.text == "(":
            self.advance()
            inner = self.term(bound)
            self.expect(")")
            return inner
        if token.kind != "ident":
            raise self.error(["term"])

        word = token.text
        constants = {"State": StateTy(), "Event": EventTy(), "Nat": NatTy(), "InfTrace": InfTraceTy(),
                     "zero": Zero(), "bot": Bottom(), "Prop": Universe(Layer.PROP)}
        if word in constants:
            self.advance()
            return constants[word]
        if word in ("Uc", "Type"):
            self.advance()
            self.expect("(")
            level = self.number()
            self.expect(")")
            return Universe(Layer.UC if word == "Uc" else Layer.TYPE, level)
        constructors = {
            "succ": (1, lambda a: Succ(*a)),
            "nil": (1, lambda a: Nil(*a)),
            "step": (3, lambda a: Step(*a)),
            "trace_elim": (4, lambda a: TraceElim(*a)),
            "FinTrace": (2, lambda a: FinTraceTy(*a)),
            "Step": (3, lambda a: StepTy(*a)),
        }
        if word in constructors:
            self.advance()
            arity, build = constructors[word]
            return build(self._args(bound, arity))
        if word in KEYWORDS:
            raise self.error(["term"])
        self.advance()
        return self.resolve(token, bound)

    def resolve(self, token: Token, bound: List[str]) -> Term:
        name = token.text
        for depth, bound_name in enumerate(reversed(bound)):
            if bound_name == name:
                return Var(depth)
        if name in self.scope.defs:
            return self.scope.defs[name]
        if name in self.scope.states:
            return StateConst(name)
        if name in self.scope.events:
            return EventConst(name)
        if name in self.scope.witnesses:
            return StepWitness(name)
        if name in self.scope.corecs:
            return CorecRef(name)
        raise self.error(["identifier"], token, f"unknown identifier '{name}'")

    # Policies

    def policy(self) -> PolicyExpr:
        expr = self.policy_and()
        while self.at("or"):
            self.advance()
            expr = Or(expr, self.policy_and())
        return expr

    def policy_and(self) -> PolicyExpr:
        expr = self.policy_not()
        while self.at("and"):
            self.advance()
            expr = And(expr, self.policy_not())
        return expr

    def policy_not(self) -> PolicyExpr:
        if self.at("not"):
            self.advance()
            return Not(self.policy_not())
        return self.policy_atom()

    def policy_atom(self) -> PolicyExpr:
        if self.at("("):
            self.advance()
            expr = self.policy()
            self.expect(")")
            return expr
        if self.at("occurs") or self.at("count"):
            word = self.advance().text
            self.expect("(")
            event = self._known(self.scope.events, self.identifier("event"), "event")
            self.expect(")")
            if word == "occurs":
                return Occurs(event)
            self.expect(">=")
            return CountAtLeast(event, self.number())
        token = self.identifier("policy")
        try:
            return self.scope.policies[token.text]
        except KeyError:
            raise self.error(["policy"], token, f"unknown policy '{token.text}'") from None

    # Presheaves

    def presheaf_decl(self) -> PresheafDecl:
        name = self.declare(self.identifier("presheaf name"))
        self.expect(":=")
        spec: PresheafSpec
        if self.at("predicate"):
            self.advance()
            expr = self.policy()
            roots, depth = self.base_clause()
            spec = PredicateSpec(name, expr, roots, depth)
        elif self.at("evidence"):
            self.advance()
            self.expect("issue")
            issue = self._known(self.scope.events, self.identifier("event"), "event")
            self.expect("revoke")
            revoke = self._known(self.scope.events, self.identifier("event"), "event")
            roots, depth = self.base_clause()
            spec = EvidenceSpec(name, issue, revoke, roots, depth)
        elif self.at("table"):
            self.advance()
            roots, depth = self.base_clause()
            fibers, maps = self.table_body()
            spec = TabulatedSpec(name, fibers, maps, roots, depth)
        else:
            raise self.error(["'predicate'", "'evidence'", "'table'"])
        return PresheafDecl(spec)

    def base_clause(self) -> Tuple[Tuple[str, ...], Optional[int]]:
        self.expect("from")
        roots = [self._known(self.scope.states, self.identifier("state"), "state")]
        while self.at(","):
            self.advance()
            roots.append(self._known(self.scope.states, self.identifier("state"), "state"))
        depth = None
        if self.at("depth"):
            self.advance()
            depth = self.number()
        return tuple(roots), depth

    def path_literal(self) -> Path:
        start = self.current
        src = self._known(self.scope.states, self.identifier("state"), "state")
        self.expect("[")
        edges: List[Transition] = []
        while not self.at("]"):
            if edges:
                self.expect(",")
            witness = self._known(self.scope.witnesses, self.identifier("step witness"), "step witness")
            edges.append(self.scope.witnesses[witness])
        self.expect("]")
        try:
            return Path(src, edges[-1].dst if edges else src, tuple(edges))
        except TransitionError as exc:
            raise self.error([], start, str(exc)) from None

    def table_body(
        self,
    ) -> Tuple[Tuple[Tuple[Path, FrozenSet[str]], ...], Tuple[Tuple[Path, Path, Tuple[Tuple[str, str], ...]], ...]]:
        fibers: List[Tuple[Path, FrozenSet[str]]] = []
        maps: List[Tuple[Path, Path, Tuple[Tuple[str, str], ...]]] = []
        self.expect("{")
        while not self.at("}"):
            if self.at("fiber"):
                self.advance()
                path = self.path_literal()
                self.expect("=")
                self.expect("{")
                witnesses: List[str] = []
                while not self.at("}"):
                    if witnesses:
                        self.expect(",")
                    witnesses.append(self.identifier("witness name").text)
                self.expect("}")
                fibers.append((path, frozenset(witnesses)))
            elif self.at("restrict"):
                self.advance()
                whole = self.path_literal()
                self.expect("=>")
                prefix = self.path_literal()
                self.expect(":")
                pairs: List[Tuple[str, str]] = []
                while not self.at(";"):
                    if pairs:
                        self.expect(",")
                    source = self.identifier("witness name").text
                    self.expect("->")
                    pairs.append((source, self.identifier("witness name").text))
                maps.append((prefix, whole, tuple(pairs)))
            else:
                raise self.error(["'fiber'", "'restrict'", "'}'"])
            self.expect(";")
        self.expect("}")
        return tuple(fibers), tuple(maps)


_ATOM_KEYWORDS = frozenset(
    {"State", "Event", "Nat", "InfTrace", "zero", "bot", "Prop", "Uc", "Type",
     "succ", "nil", "step", "trace_elim", "FinTrace", "Step"}
)


def parse_module(text: str, file: str = "<input>") -> ModuleAST:
    """
    Parse a module.

    Raises:
        ParseError: at the first syntax or name-resolution failure
    """
    return Parser(text, file).parse_module()


def parse_term(text: str, scope: Union[ModuleAST, Scope, None] = None, names: Sequence[str] = ()) -> Term:
    """
    Parse a standalone term against a module's globals.

    Args:
        text: Term source
        scope: Module (or prepared scope) providing global names
        names: Bound variable names, outermost first
    """
    if isinstance(scope, ModuleAST):
        scope = Scope.of_module(scope)
    parser = Parser(text, "<term>", scope)
    term = parser.term(list(names))
    if parser.current.kind != "eof":
        raise parser.error(["end of input"])
    return term


def parse_file(path: str) -> ModuleAST:
    with open(path, encoding="utf-8") as handle:
        return parse_module(handle.read(), path)


# Printing


def _constant_names(t: Term) -> Set[str]:
    return {
        sub.name
        for sub in subterms(t)
        if isinstance(sub, (StateConst, EventConst, StepWitness, CorecRef))
    }


def _fresh(hint: str, taken: Set[str]) -> str:
    base = hint if IDENTIFIER.fullmatch(hint) and hint not in KEYWORDS and hint != "_" else "x"
    base = base.rstrip("0123456789") or "x"
    candidate, counter = base, 0
    while candidate in taken or candidate in KEYWORDS:
        counter += 1
        candidate = f"{base}{counter}"
    return candidate


def pretty_print(t: Term, names: Union[Context, Sequence[str]] = (), avoid: Iterable[str] = ()) -> str:
    """
    Render a term in surface syntax.

    Args:
        t: Term scope-valid in ``names``
        names: Context or bound names, outermost first
        avoid: Extra global names that invented binder names must not capture

    Returns:
        Text that ``parse_term`` reads back to an alpha-equivalent term
    """
    bound = names.names() if isinstance(names, Context) else list(names)
    taken = _constant_names(t) | set(avoid)
    return _print(t, bound, taken)


def _print(t: Term, bound: List[str], taken: Set[str]) -> str:
    if isinstance(t, Var):
        return bound[-1 - t.index] if t.index < len(bound) else f"#{t.index}"
    if isinstance(t, Universe):
        return "Prop" if t.layer is Layer.PROP else f"{t.layer.value}({t.level})"
    if isinstance(t, Pi):
        if mentions_var(t.codomain, 0):
            name = _fresh(t.name, taken | set(bound))
            return f"({name} : {_print(t.domain, bound, taken)}) -> {_print(t.codomain, bound + [name], taken)}"
        domain = _print(t.domain, bound, taken)
        if isinstance(t.domain, (Pi, Lam)):
            domain = f"({domain})"
        return f"{domain} -> {_print(shift(t.codomain, -1), bound, taken)}"
    if isinstance(t, Lam):
        name = _fresh(t.name, taken | set(bound))
        return f"fun {name} => {_print(t.body, bound + [name], taken)}"
    if isinstance(t, App):
        fn = _print(t.fn, bound, taken)
        if isinstance(t.fn, (Pi, Lam)):
            fn = f"({fn})"
        arg = _print(t.arg, bound, taken)
        if isinstance(t.arg, (App, Pi, Lam)):
            arg = f"({arg})"
        return f"{fn} {arg}"
    if isinstance(t, (StateConst, EventConst, StepWitness, CorecRef)):
        return t.name
    if isinstance(t, Nil):
        return f"nil({_print(t.state, bound, taken)})"
    if isinstance(t, Step):
        return f"step({_print(t.prefix, bound, taken)}, {_print(t.event, bound, taken)}, {_print(t.witness, bound, taken)})"
    if isinstance(t, TraceElim):
        parts = ", ".join(_print(part, bound, taken) for part in (t.motive, t.base, t.step_case, t.scrutinee))
        return f"trace_elim({parts})"
    if isinstance(t, FinTraceTy):
        return f"FinTrace({_print(t.src, bound, taken)}, {_print(t.dst, bound, taken)})"
    if isinstance(t, StepTy):
        return f"Step({_print(t.src, bound, taken)}, {_print(t.event, bound, taken)}, {_print(t.dst, bound, taken)})"
    if isinstance(t, Succ):
        return f"succ({_print(t.pred, bound, taken)})"
    simple = {StateTy: "State", EventTy: "Event", NatTy: "Nat", InfTraceTy: "InfTrace", Zero: "zero", Bottom: "bot"}
    if type(t) in simple:
        return simple[type(t)]
    raise TypeError(f"cannot print {type(t).__name__}")
