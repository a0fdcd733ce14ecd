"""Triple store with a Turtle-subset parser and subclass/instance reasoning.

Knowledge is held as prefixed-name triples. The supported Turtle subset
covers ``@prefix`` directives, ``#`` comments, statements terminated by
``.``, ``;``/``,`` abbreviations, the ``a`` keyword, quoted strings,
integers, decimals and booleans. Blank nodes, collections, language tags
and ``^^`` typed literals are rejected with a diagnostic naming the
feature.

Identity of an :class:`Iri` is its ``(prefix, local)`` pair; canonical
ordering resolves against the graph's prefix table and compares absolute
forms byte-wise.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union


class OntologyError(Exception):
    """Base class for graph and parser errors."""

    code = "ontology_error"


class TurtleSyntaxError(OntologyError):
    code = "syntax_error"

    def __init__(self, line: int, column: int, expected: str):
        self.line = line
        self.column = column
        self.expected = expected
        super().__init__(f"line {line}, column {column}: expected {expected}")


class UnknownPrefixError(OntologyError):
    code = "unknown_prefix"

    def __init__(self, name: str, line: int = 0):
        self.name = name
        self.line = line
        super().__init__(f"unknown prefix '{name}'" + (f" at line {line}" if line else ""))


class SubclassCycleError(OntologyError):
    code = "subclass_cycle"

    def __init__(self, member: "Iri"):
        self.member = member
        super().__init__(f"subclass hierarchy contains a cycle through {member}")


_LOCAL_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9-]*$")
_PREFIX_RE = re.compile(r"[A-Za-z][A-Za-z0-9_-]*$")


@dataclass(frozen=True, order=True)
class Iri:
    """A prefixed name. Locals exclude ``_`` so planner mangling stays reversible."""

    prefix: str
    local: str

    def __post_init__(self):
        if not _PREFIX_RE.match(self.prefix):
            raise ValueError(f"invalid prefix {self.prefix!r}")
        if not _LOCAL_RE.match(self.local):
            raise ValueError(f"invalid local name {self.local!r} (no whitespace or underscores)")

    @classmethod
    def parse(cls, text: str) -> "Iri":
        prefix, sep, local = text.partition(":")
        if not sep:
            raise ValueError(f"expected 'prefix:local', got {text!r}")
        return cls(prefix, local)

    def __str__(self) -> str:
        return f"{self.prefix}:{self.local}"


@dataclass(frozen=True)
class Literal:
    """A string, int, float or bool literal. Floats must be finite."""

    value: Union[str, int, float, bool]

    def __post_init__(self):
        if isinstance(self.value, float) and not math.isfinite(self.value):
            raise ValueError("float literals must be finite")

    @property
    def kind(self) -> str:
        if isinstance(self.value, bool):
            return "bool"
        if isinstance(self.value, int):
            return "int"
        if isinstance(self.value, float):
            return "float"
        return "string"

    def __str__(self) -> str:
        return turtle_literal(self)


Term = Union[Iri, Literal]


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))


# Well-known prefixes resolvable even when a document does not declare
# them (the `a` keyword implies rdf:type).
WELL_KNOWN_PREFIXES = {
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "owl": "http://www.w3.org/2002/07/owl#",
}

# Vocabulary used throughout; bases live in data/base.ttl.
RDF_TYPE = Iri("rdf", "type")
RDFS_SUBCLASS = Iri("rdfs", "subClassOf")
RDFS_LABEL = Iri("rdfs", "label")
CONTAIN = Iri("skiros", "contain")
AT = Iri("skiros", "at")
HAS_A = Iri("skiros", "hasA")
HAS_SKILL = Iri("skiros", "hasSkill")
SKILL_CONCEPT = Iri("skiros", "Skill")
SCENE_ROOT = Iri("skiros", "Scene-0")

POSE_PROPS = tuple(
    Iri("skiros", name)
    for name in (
        "PositionX", "PositionY", "PositionZ",
        "OrientationW", "OrientationX", "OrientationY", "OrientationZ",
    )
)


def _sort_key(term: Term, resolver) -> tuple:
    if isinstance(term, Iri):
        return (0, resolver(term), "")
    return (1, term.kind, str(term.value))


class Graph:
    """A set of triples plus a prefix table and a cached subclass closure."""

    def __init__(self, prefixes: Optional[dict] = None, triples: Iterable[Triple] = ()):
        self._prefixes: dict[str, str] = dict(prefixes or {})
        self._triples: set[Triple] = set()
        self._closure: Optional[dict] = None
        for t in triples:
            self.add(t)

    # -- prefixes ---------------------------------------------------------
    @property
    def prefixes(self) -> dict:
        return dict(self._prefixes)

    def bind(self, prefix: str, base: str):
        existing = self._prefixes.get(prefix)
        if existing is not None and existing != base:
            raise OntologyError(f"prefix '{prefix}' already bound to {existing}")
        self._prefixes[prefix] = base

    def resolve(self, iri: Iri) -> str:
        base = self._prefixes.get(iri.prefix) or WELL_KNOWN_PREFIXES.get(iri.prefix)
        if base is None:
            raise UnknownPrefixError(iri.prefix)
        return base + iri.local

    def sort_key(self, term: Term) -> tuple:
        return _sort_key(term, self.resolve)

    # -- triples ----------------------------------------------------------
    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._triples

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._prefixes == other._prefixes and self._triples == other._triples

    def add(self, triple: Triple) -> bool:
        """Insert a triple; duplicate insertion is a silent no-op."""
        if triple in self._triples:
            return False
        self._triples.add(triple)
        if triple.predicate == RDFS_SUBCLASS:
            self._closure = None
        return True

    def discard(self, triple: Triple) -> bool:
        if triple not in self._triples:
            return False
        self._triples.remove(triple)
        if triple.predicate == RDFS_SUBCLASS:
            self._closure = None
        return True

    def triples(
        self,
        subject: Optional[Iri] = None,
        predicate: Optional[Iri] = None,
        object: Optional[Term] = None,
    ) -> Iterator[Triple]:
        for t in self._triples:
            if subject is not None and t.subject != subject:
                continue
            if predicate is not None and t.predicate != predicate:
                continue
            if object is not None and t.object != object:
                continue
            yield t

    def query(
        self,
        subject: Optional[Iri] = None,
        predicate: Optional[Iri] = None,
        object: Optional[Term] = None,
    ) -> list[dict]:
        """Match a pattern with ``None`` wildcards; bindings in canonical order."""
        matches = sorted(
            self.triples(subject, predicate, object),
            key=lambda t: (self.sort_key(t.subject), self.sort_key(t.predicate), self.sort_key(t.object)),
        )
        out = []
        for t in matches:
            binding = {}
            if subject is None:
                binding["subject"] = t.subject
            if predicate is None:
                binding["predicate"] = t.predicate
            if object is None:
                binding["object"] = t.object
            out.append(binding)
        return out

    def copy(self) -> "Graph":
        g = Graph(self._prefixes)
        g._triples = set(self._triples)
        g._closure = self._closure
        return g

    def update(self, other: "Graph"):
        for prefix, base in other._prefixes.items():
            self.bind(prefix, base)
        for t in other._triples:
            self.add(t)

    # -- reasoning --------------------------------------------------------
    def _subclass_closure(self) -> dict:
        if self._closure is None:
            parents: dict[Iri, set[Iri]] = {}
            for t in self._triples:
                if t.predicate == RDFS_SUBCLASS and isinstance(t.object, Iri):
                    parents.setdefault(t.subject, set()).add(t.object)
            closure: dict[Iri, set[Iri]] = {}

            def ancestors(node: Iri, stack: tuple) -> set[Iri]:
                if node in stack:
                    raise SubclassCycleError(node)
                if node in closure:
                    return closure[node]
                acc = {node}
                for parent in parents.get(node, ()):
                    acc |= ancestors(parent, stack + (node,))
                closure[node] = acc
                return acc

            for node in list(parents):
                ancestors(node, ())
            self._closure = closure
        return self._closure

    def validate_subclass_acyclic(self):
        """Raise :class:`SubclassCycleError` naming a cycle member if one exists."""
        self._closure = None
        self._subclass_closure()

    def superclasses(self, concept: Iri) -> set[Iri]:
        """Reflexive-transitive ancestors of a concept (unknown concepts are leaf classes)."""
        return set(self._subclass_closure().get(concept, {concept}))

    def is_subclass_of(self, sub: Iri, sup: Iri) -> bool:
        return sup == sub or sup in self._subclass_closure().get(sub, ())

    def subclasses(self, concept: Iri) -> set[Iri]:
        closure = self._subclass_closure()
        down = {c for c, ups in closure.items() if concept in ups}
        down.add(concept)
        return down

    def direct_superclass(self, concept: Iri) -> Optional[Iri]:
        ups = sorted(
            (t.object for t in self.triples(subject=concept, predicate=RDFS_SUBCLASS)
             if isinstance(t.object, Iri)),
            key=self.sort_key,
        )
        return ups[0] if ups else None

    def instances_of(self, concept: Iri) -> list[Iri]:
        found = {
            t.subject
            for t in self.triples(predicate=RDF_TYPE)
            if isinstance(t.object, Iri) and self.is_subclass_of(t.object, concept)
        }
        return sorted(found, key=self.sort_key)

    def type_of(self, instance: Iri) -> Optional[Iri]:
        types = sorted(
            (t.object for t in self.triples(subject=instance, predicate=RDF_TYPE)
             if isinstance(t.object, Iri)),
            key=self.sort_key,
        )
        return types[0] if types else None


# ---------------------------------------------------------------------------
# Turtle subset parser
# ---------------------------------------------------------------------------

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}
_UNSUPPORTED = {
    "[": "blank nodes are not supported",
    "]": "blank nodes are not supported",
    "(": "collections are not supported",
    ")": "collections are not supported",
}

_NUMBER_RE = re.compile(r"[+-]?(\d+\.\d+([eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+)")
_PNAME_RE = re.compile(r"([A-Za-z][A-Za-z0-9_-]*):([A-Za-z0-9][A-Za-z0-9-]*)")
_IRIREF_RE = re.compile(r"<([^<>\s]*)>")
_WORD_RE = re.compile(r"[A-Za-z][A-Za-z0-9_-]*")
_DIRECTIVE_RE = re.compile(r"^\s*@prefix\s+([A-Za-z][A-Za-z0-9_-]*):\s*<([^<>\s]*)>\s*\.\s*(#.*)?$")


class _Token:
    __slots__ = ("kind", "value", "line", "column")

    def __init__(self, kind, value, line, column):
        self.kind = kind
        self.value = value
        self.line = line
        self.column = column


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line = 1
    line_start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        col = i - line_start + 1
        if ch == "\n":
            line += 1
            line_start = i + 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in _UNSUPPORTED:
            raise TurtleSyntaxError(line, col, _UNSUPPORTED[ch])
        if text.startswith("_:", i):
            raise TurtleSyntaxError(line, col, "blank node labels are not supported")
        if text.startswith("^^", i):
            raise TurtleSyntaxError(line, col, "typed literals (^^) are not supported")
        if ch == "@":
            raise TurtleSyntaxError(line, col, "language tags (@) are not supported")
        if ch in ".;,":
            tokens.append(_Token(ch, ch, line, col))
            i += 1
            continue
        if ch == '"':
            if text.startswith('"""', i):
                raise TurtleSyntaxError(line, col, "long strings are not supported")
            j = i + 1
            out = []
            while True:
                if j >= n or text[j] == "\n":
                    raise TurtleSyntaxError(line, col, "closing quote")
                c = text[j]
                if c == "\\":
                    esc = text[j + 1] if j + 1 < n else ""
                    if esc not in _ESCAPES:
                        raise TurtleSyntaxError(line, j - line_start + 2, "a valid escape (\\n \\t \\r \\\" \\\\)")
                    out.append(_ESCAPES[esc])
                    j += 2
                    continue
                if c == '"':
                    break
                out.append(c)
                j += 1
            tokens.append(_Token("string", "".join(out), line, col))
            i = j + 1
            continue
        if ch == "<":
            m = _IRIREF_RE.match(text, i)
            if not m:
                raise TurtleSyntaxError(line, col, "an IRI reference <...>")
            tokens.append(_Token("iriref", m.group(1), line, col))
            i = m.end()
            continue
        if ch.isdigit() or (ch in "+-" and i + 1 < n and text[i + 1].isdigit()):
            m = _NUMBER_RE.match(text, i)
            raw = m.group(0)
            if "." in raw or "e" in raw or "E" in raw:
                tokens.append(_Token("float", float(raw), line, col))
            else:
                tokens.append(_Token("int", int(raw), line, col))
            i = m.end()
            continue
        m = _PNAME_RE.match(text, i)
        if m:
            tokens.append(_Token("pname", (m.group(1), m.group(2)), line, col))
            i = m.end()
            continue
        word_m = _WORD_RE.match(text, i)
        if word_m:
            word = word_m.group(0)
            if word == "a":
                tokens.append(_Token("a", "a", line, col))
            elif word == "true":
                tokens.append(_Token("bool", True, line, col))
            elif word == "false":
                tokens.append(_Token("bool", False, line, col))
            elif i + len(word) < n and text[i + len(word)] == ":":
                raise TurtleSyntaxError(line, col, "a local name after ':'")
            else:
                raise TurtleSyntaxError(line, col, f"a directive, name or literal (got {word!r})")
            i += len(word)
            continue
        if ch == "_":
            raise TurtleSyntaxError(line, col, "a name without underscores")
        raise TurtleSyntaxError(line, col, f"a statement (unexpected {ch!r})")
    tokens.append(_Token("eof", None, line, n - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], graph: Graph):
        self._tokens = tokens
        self._pos = 0
        self._graph = graph

    def _peek(self) -> _Token:
        return self._tokens[self._pos]

    def _next(self) -> _Token:
        tok = self._tokens[self._pos]
        self._pos += 1
        return tok

    def parse(self):
        while self._peek().kind != "eof":
            self._parse_statement()

    def _parse_statement(self):
        subj_tok = self._next()
        if subj_tok.kind != "pname":
            raise TurtleSyntaxError(subj_tok.line, subj_tok.column, "a subject name")
        subject = self._to_iri(subj_tok)
        while True:
            predicate = self._parse_verb()
            while True:
                obj = self._parse_object()
                self._graph.add(Triple(subject, predicate, obj))
                if self._peek().kind == ",":
                    self._next()
                    continue
                break
            tok = self._next()
            if tok.kind == ";":
                if self._peek().kind == ".":
                    self._next()
                    break
                continue
            if tok.kind == ".":
                break
            raise TurtleSyntaxError(tok.line, tok.column, "';', ',' or '.'")

    def _parse_verb(self) -> Iri:
        tok = self._next()
        if tok.kind == "a":
            return RDF_TYPE
        if tok.kind == "pname":
            return self._to_iri(tok)
        raise TurtleSyntaxError(tok.line, tok.column, "a predicate name or 'a'")

    def _parse_object(self) -> Term:
        tok = self._next()
        if tok.kind == "pname":
            return self._to_iri(tok)
        if tok.kind in ("string", "int", "float", "bool"):
            return Literal(tok.value)
        raise TurtleSyntaxError(tok.line, tok.column, "an object (name or literal)")

    def _to_iri(self, tok: _Token) -> Iri:
        prefix, local = tok.value
        if prefix not in self._graph.prefixes:
            raise UnknownPrefixError(prefix, tok.line)
        return Iri(prefix, local)


def parse_turtle(text: str) -> Graph:
    """Parse the Turtle subset into a :class:`Graph`.

    ``@prefix`` directives must each sit on their own line; the remaining
    lines form triple statements.
    """
    prefixes: dict[str, str] = {}
    body_lines = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        if raw.lstrip().startswith("@prefix"):
            m = _DIRECTIVE_RE.match(raw)
            if not m:
                raise TurtleSyntaxError(lineno, raw.index("@prefix") + 1, "@prefix name: <iri> .")
            prefixes[m.group(1)] = m.group(2)
            body_lines.append("")
        else:
            body_lines.append(raw)
    graph = Graph(prefixes)
    parser = _Parser(_tokenize("\n".join(body_lines)), graph)
    parser.parse()
    for used in _used_prefixes(graph):
        if used not in graph.prefixes and used in WELL_KNOWN_PREFIXES:
            graph.bind(used, WELL_KNOWN_PREFIXES[used])
    graph.validate_subclass_acyclic()
    return graph


def _used_prefixes(graph: Graph) -> set:
    used = set()
    for t in graph.triples():
        used.add(t.subject.prefix)
        used.add(t.predicate.prefix)
        if isinstance(t.object, Iri):
            used.add(t.object.prefix)
    return used


def turtle_literal(lit: Literal) -> str:
    v = lit.value
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        text = repr(v)
        if "." not in text and "e" not in text and "E" not in text:
            text += ".0"
        return text
    escaped = v.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") \
               .replace("\r", "\\r").replace("\t", "\\t")
    return f'"{escaped}"'


def _term_text(term: Term) -> str:
    if isinstance(term, Iri):
        return str(term)
    return turtle_literal(term)


def serialize_turtle(graph: Graph) -> str:
    """Canonical text: prefixes sorted by name, triples sorted by absolute IRI."""
    prefixes = graph.prefixes
    for used in _used_prefixes(graph):
        if used not in prefixes and used in WELL_KNOWN_PREFIXES:
            prefixes[used] = WELL_KNOWN_PREFIXES[used]
    lines = [f"@prefix {name}: <{base}> ." for name, base in sorted(prefixes.items())]
    if lines:
        lines.append("")
    ordered = sorted(
        graph.triples(),
        key=lambda t: (graph.sort_key(t.subject), graph.sort_key(t.predicate), graph.sort_key(t.object)),
    )
    for t in ordered:
        lines.append(f"{t.subject} {t.predicate} {_term_text(t.object)} .")
    return "\n".join(lines) + ("\n" if lines else "")
