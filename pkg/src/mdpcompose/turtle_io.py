"""Reader and writer for the Turtle subset used by activity descriptions.

Supported subset: ``@prefix`` declarations, the ``a`` keyword, ``;`` and
``,`` continuations, typed literals ``"..."^^xsd:{boolean,integer,double,
string}`` and ``#`` comments. No blank nodes, no collections. Entity
identity is the local name behind the ``entity:`` prefix; the namespaces
are fixed. Properties of unknown names (and subjects of unknown concepts)
are preserved as opaque triples and written back out unchanged.
"""

from __future__ import annotations

import re

from .errors import GraphValidationError, TurtleSyntaxError
from .kg import (
    Concept,
    KnowledgeGraph,
    PROPERTIES,
    new_entity,
    parse_property_value,
    render_property_value,
    resolve_property,
    sorted_entities,
)

NAMESPACES = {
    "entity": "http://example.org/Entity/",
    "property": "http://example.org/Property/",
    "concept": "http://example.org/Concept/",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
}

_XSD_FOR_KIND = {
    "bool": "boolean",
    "int": "integer",
    "double": "double",
    "string": "string",
    "comm": "string",
    "feature_type": "string",
    "distribution": "string",
    "impact": "string",
}

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<comment>#[^\n]*)"
    r"|(?P<prefix_kw>@prefix\b)"
    r"|(?P<iri><[^>]*>)"
    r"|(?P<literal>\"(?:[^\"\\]|\\.)*\"(?:\^\^[A-Za-z][A-Za-z0-9_]*:[A-Za-z0-9_][A-Za-z0-9_-]*)?)"
    r"|(?P<pname>[A-Za-z][A-Za-z0-9_]*:[A-Za-z0-9_][A-Za-z0-9_-]*)"
    r"|(?P<pname_ns>[A-Za-z][A-Za-z0-9_]*:)"
    r"|(?P<kw_a>\ba\b)"
    r"|(?P<punct>[.;,])"
)


class _Token:
    __slots__ = ("kind", "text", "line", "column")

    def __init__(self, kind, text, line, column):
        self.kind = kind
        self.text = text
        self.line = line
        self.column = column


def _tokenize(text):
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise TurtleSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        chunk = m.group(0)
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.idx = 0
        self.prefixes: dict[str, str] = {}

    def _peek(self):
        return self.tokens[self.idx] if self.idx < len(self.tokens) else None

    def _take(self, kind=None, expected=None):
        tok = self._peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            raise TurtleSyntaxError(
                "unexpected end of document",
                last.line if last else 1,
                last.column if last else 1,
                expected=expected,
            )
        if kind is not None and tok.kind != kind:
            raise TurtleSyntaxError(
                f"unexpected token {tok.text!r}", tok.line, tok.column, expected=expected
            )
        self.idx += 1
        return tok

    def _split_pname(self, tok):
        prefix, local = tok.text.split(":", 1)
        if prefix not in self.prefixes:
            raise TurtleSyntaxError(f"unknown prefix {prefix!r}", tok.line, tok.column)
        return prefix, local

    def parse(self):
        """Returns raw triples as (subject, predicate, object-token) rows."""
        triples = []
        while self._peek() is not None:
            tok = self._peek()
            if tok.kind == "prefix_kw":
                self._take()
                name_tok = self._take("pname_ns", expected="prefix:")
                iri_tok = self._take("iri", expected="<iri>")
                dot = self._take("punct", expected=".")
                if dot.text != ".":
                    raise TurtleSyntaxError(
                        f"unexpected {dot.text!r}", dot.line, dot.column, expected="."
                    )
                self.prefixes[name_tok.text[:-1]] = iri_tok.text[1:-1]
                continue
            triples.extend(self._statement())
        return triples

    def _statement(self):
        subj_tok = self._take("pname", expected="subject")
        _prefix, subject = self._split_pname(subj_tok)
        out = []
        while True:
            verb_tok = self._peek()
            if verb_tok is None:
                raise TurtleSyntaxError(
                    "unexpected end of statement",
                    subj_tok.line,
                    subj_tok.column,
                    expected="predicate",
                )
            if verb_tok.kind == "kw_a":
                self._take()
                predicate = "a"
            elif verb_tok.kind == "pname":
                self._take()
                _p, predicate = self._split_pname(verb_tok)
            else:
                raise TurtleSyntaxError(
                    f"unexpected token {verb_tok.text!r}",
                    verb_tok.line,
                    verb_tok.column,
                    expected="predicate",
                )
            while True:
                obj_tok = self._peek()
                if obj_tok is None:
                    raise TurtleSyntaxError(
                        "unexpected end of statement",
                        verb_tok.line,
                        verb_tok.column,
                        expected="object",
                    )
                if obj_tok.kind == "pname":
                    self._take()
                    self._split_pname(obj_tok)
                    out.append((subject, predicate, obj_tok.text))
                elif obj_tok.kind == "literal":
                    self._take()
                    out.append((subject, predicate, obj_tok.text))
                else:
                    raise TurtleSyntaxError(
                        f"unexpected token {obj_tok.text!r}",
                        obj_tok.line,
                        obj_tok.column,
                        expected="object",
                    )
                sep = self._peek()
                if sep is not None and sep.kind == "punct" and sep.text == ",":
                    self._take()
                    continue
                break
            sep = self._take("punct", expected="';' or '.'")
            if sep.text == ".":
                return out
            if sep.text == ";":
                nxt = self._peek()
                if nxt is not None and nxt.kind == "punct" and nxt.text == ".":
                    self._take()
                    return out
                continue
            raise TurtleSyntaxError(
                f"unexpected {sep.text!r}", sep.line, sep.column, expected="';' or '.'"
            )


_LITERAL = re.compile(r'^"((?:[^"\\]|\\.)*)"(?:\^\^([A-Za-z]+):([A-Za-z0-9_-]+))?$')


def _unescape(text):
    return text.replace('\\"', '"').replace("\\\\", "\\")


def _decode_object(token_text):
    """Returns ("literal", lexical) or ("ref", local name)."""
    m = _LITERAL.match(token_text)
    if m:
        return "literal", _unescape(m.group(1))
    _prefix, local = token_text.split(":", 1)
    return "ref", local


def parse_turtle(text: str) -> KnowledgeGraph:
    """Parse a Turtle document into a validated knowledge graph."""
    raw = _Parser(text).parse()
    graph = KnowledgeGraph()
    problems: list[str] = []

    type_of: dict[str, Concept] = {}
    for subject, predicate, obj_text in raw:
        if predicate != "a":
            continue
        obj_kind, value = _decode_object(obj_text)
        if obj_kind != "ref":
            problems.append(f"entity {subject!r}: type must be a concept reference")
            continue
        try:
            type_of[subject] = Concept(value)
        except ValueError:
            pass  # unknown concept, preserved opaquely below

    entities = {name: new_entity(concept, name) for name, concept in type_of.items()}

    for subject, predicate, obj_text in raw:
        if predicate == "a" and subject in type_of:
            continue
        concept = type_of.get(subject)
        resolved = resolve_property(concept, predicate) if concept else None
        if concept is None or resolved is None:
            obj_kind, decoded = _decode_object(obj_text)
            stored = obj_text if obj_kind == "literal" else decoded
            graph.add_extra_triple(subject, predicate, stored)
            continue
        attr, value_kind, multi, _req = PROPERTIES[concept][resolved]
        _obj_kind, lexical = _decode_object(obj_text)
        try:
            value = parse_property_value(value_kind, lexical)
        except ValueError as exc:
            problems.append(
                f"{concept.value} {subject!r}: bad value for {resolved} ({exc})"
            )
            continue
        entity = entities[subject]
        if multi:
            bucket = getattr(entity, attr)
            if value not in bucket:
                bucket.append(value)
        else:
            setattr(entity, attr, value)

    for entity in entities.values():
        graph.add(entity)

    if problems:
        raise GraphValidationError(problems)
    graph.validate()
    return graph


_PROPERTY_WRITE_ORDER: dict[Concept, list[str]] = {
    Concept.ACTIVITY: [
        "isSequential",
        "hasNumberOfActors",
        "hasCommunicationType",
        "hasState",
        "hasObservationFeature",
        "hasAction",
    ],
    Concept.STATE: [
        "isGoal",
        "isFinalState",
        "isInitialState",
        "hasExpression",
        "hasReward",
        "hasObservationFeature",
        "hasAction",
    ],
    Concept.OBSERVATION_FEATURE: [
        "hasRangeStart",
        "hasRangeEnd",
        "hasFeatureType",
        "hasUnit",
        "hasProbabilityDistribution",
        "hasLambda",
        "hasMeanValue",
        "hasStandardDeviation",
        "hasVariance",
        "hasMedian",
        "hasModeValue",
        "hasNumberExperiments",
        "hasNumberSuccesses",
        "hasSuccessRate",
        "hasFailureRate",
    ],
    Concept.ACTION: ["hasTransition", "hasEffect", "hasDuration", "hasFrequency"],
    Concept.EFFECT: ["hasImpactType", "hasObservationFeature", "hasEquation"],
    Concept.EQUATION: ["hasExpression", "hasParameter"],
    Concept.PARAMETER: ["hasName", "hasValue"],
    Concept.TRANSITION: [
        "hasPreviousState",
        "hasNextState",
        "hasAction",
        "hasTransitionProbability",
    ],
}


def _escape(text):
    return text.replace("\\", "\\\\").replace('"', '\\"')


def write_turtle(graph: KnowledgeGraph) -> str:
    """Serialize a graph; parse_turtle(write_turtle(g)) is isomorphic to g."""
    lines = [f"@prefix {p}: <{iri}> ." for p, iri in NAMESPACES.items()]
    lines.append("")

    for entity in sorted_entities(graph):
        lines.append(f"entity:{entity.name} a concept:{entity.concept.value};")
        props = PROPERTIES[entity.concept]
        rendered: list[str] = []
        for prop in _PROPERTY_WRITE_ORDER[entity.concept]:
            attr, kind, multi, _req = props[prop]
            value = getattr(entity, attr)
            if value is None:
                continue
            items = value if multi else [value]
            for item in items:
                if kind == "ref":
                    rendered.append(f"property:{prop} entity:{item}")
                else:
                    lexical = _escape(render_property_value(kind, item))
                    rendered.append(
                        f'property:{prop} "{lexical}"^^xsd:{_XSD_FOR_KIND[kind]}'
                    )
        for i, row in enumerate(rendered):
            lines.append(f"    {row}{';' if i < len(rendered) - 1 else ' .'}")
        if not rendered:
            lines[-1] = lines[-1][:-1] + " ."
        lines.append("")

    for subject, predicate, obj in sorted(graph.extra_triples):
        verb = "a" if predicate == "a" else f"property:{predicate}"
        if obj.startswith('"'):
            rendered_obj = obj
        elif predicate == "a":
            rendered_obj = f"concept:{obj}"
        else:
            rendered_obj = f"entity:{obj}"
        lines.append(f"entity:{subject} {verb} {rendered_obj} .")
    return "\n".join(lines).rstrip() + "\n"
