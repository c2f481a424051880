"""Formal rational linear combinations of decorated dual graphs.

A term is an exact rational coefficient times a decorated graph; the
semantics of a term is the raw clutching pushforward of the product of psi
monomials on the vertex moduli, *without* the 1/|Aut| normalization.  The
angle-bracket notation carries that normalization, so parsing divides a
printed coefficient by the automorphism order and rendering multiplies it
back; everything in between works with unit multiplicities.

Terms with a negative exponent, or with a vertex whose total psi degree
exceeds the dimension of its moduli factor, are zero and are dropped during
normalization.  Every expression is homogeneous: edge count plus total psi
degree is the same in all terms.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from fractions import Fraction

from .graphs import (
    EXTRA,
    DecoratedGraph,
    GraphBuilder,
    automorphism_order,
    canonical_key,
    genus,
    graph_from_key,
    is_stable,
    label_sort_key,
    leg_kind,
    validate,
)


@dataclass(frozen=True)
class Ambient:
    """Target moduli space: a genus and the ordered pinned leg labels."""

    genus: int
    labels: tuple

    @property
    def dimension(self):
        return 3 * self.genus - 3 + len(self.labels)

    def is_stable(self):
        return 2 * self.genus - 2 + len(self.labels) > 0

    def frozen_labels(self):
        return [lab for lab in self.labels if leg_kind(lab) == "frozen"]


def make_ambient(genus_value, labels):
    labels = tuple(sorted(labels, key=label_sort_key))
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate ambient labels")
    for lab in labels:
        if leg_kind(lab) == "extra":
            raise ValueError("extra legs cannot be ambient labels")
    amb = Ambient(genus_value, labels)
    if not amb.is_stable():
        raise ValueError("unstable ambient space (genus %d with %d legs)"
                         % (genus_value, len(labels)))
    return amb


def _vertex_overweight(dg):
    g = dg.graph
    degree = [0] * g.n_vertices
    load = [0] * g.n_vertices
    for h in range(g.n_half_edges):
        degree[g.vertex_of[h]] += 1
        load[g.vertex_of[h]] += dg.exponents[h]
    return any(load[v] > 3 * g.genera[v] - 3 + degree[v] for v in range(g.n_vertices))


class Expression:
    """Normalized formal sum. Terms are stored as canonical key -> coefficient."""

    __slots__ = ("ambient", "_terms")

    def __init__(self, ambient, terms=(), _raw=None):
        self.ambient = ambient
        if _raw is not None:
            self._terms = _raw
            return
        acc = {}
        degree_seen = None
        for coeff, dg in terms:
            coeff = Fraction(coeff)
            if coeff == 0:
                continue
            if any(e < 0 for e in dg.exponents):
                continue
            if _vertex_overweight(dg):
                continue
            problems = validate(dg.graph)
            if problems:
                raise ValueError("invalid graph in term: %s" % "; ".join(problems))
            if not is_stable(dg):
                raise ValueError("unstable graph in term")
            if genus(dg.graph) != ambient.genus:
                raise ValueError("term genus %d does not match ambient genus %d"
                                 % (genus(dg.graph), ambient.genus))
            if tuple(dg.graph.leg_labels()) != ambient.labels:
                raise ValueError("term legs %r do not match ambient labels %r"
                                 % (dg.graph.leg_labels(), list(ambient.labels)))
            d = dg.degree()
            if degree_seen is None:
                degree_seen = d
            elif d != degree_seen:
                raise ValueError("mixed cohomological degrees %d and %d"
                                 % (degree_seen, d))
            key = canonical_key(dg)
            acc[key] = acc.get(key, Fraction(0)) + coeff
        self._terms = {k: c for k, c in acc.items() if c != 0}

    # -- basic views --------------------------------------------------------

    def items(self):
        """(key, coefficient) pairs in deterministic order."""
        return sorted(self._terms.items(), key=lambda kv: (len(kv[0][1]), kv[0]))

    def terms(self):
        """(coefficient, canonical graph) pairs in deterministic order."""
        return [(c, graph_from_key(k)) for k, c in self.items()]

    def coefficient(self, dg_or_key):
        key = dg_or_key if isinstance(dg_or_key, tuple) else canonical_key(dg_or_key)
        return self._terms.get(key, Fraction(0))

    def support(self):
        return frozenset(self._terms)

    def is_zero(self):
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def degree(self):
        """Common cohomological degree, or None for the zero expression."""
        for key in self._terms:
            _vpart, recs = key
            g = graph_from_key(key)
            return len(recs) + sum(g.exponents)
        return None

    def psi_free(self):
        return all(sum(graph_from_key(k).exponents) == 0 for k in self._terms)

    def __eq__(self, other):
        return (isinstance(other, Expression) and self.ambient == other.ambient
                and self._terms == other._terms)

    def __hash__(self):
        return hash((self.ambient, frozenset(self._terms.items())))

    def __repr__(self):
        if self.is_zero():
            return "<Expression 0 on M(%d,%d)>" % (self.ambient.genus, len(self.ambient.labels))
        return "<Expression %d terms, degree %d on M(%d,%d)>" % (
            len(self._terms), self.degree(), self.ambient.genus, len(self.ambient.labels))

    # -- algebra -------------------------------------------------------------

    def _check_same_ambient(self, other):
        if self.ambient != other.ambient:
            raise ValueError("ambient spaces differ")

    def __add__(self, other):
        self._check_same_ambient(other)
        if not self.is_zero() and not other.is_zero():
            if self.degree() != other.degree():
                raise ValueError("mixed cohomological degrees in sum")
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, Fraction(0)) + c
        return Expression(self.ambient, _raw={k: c for k, c in acc.items() if c != 0})

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        c = Fraction(c)
        if c == 0:
            return Expression(self.ambient, _raw={})
        return Expression(self.ambient, _raw={k: c * v for k, v in self._terms.items()})

    def __neg__(self):
        return self.scale(-1)

    def multiply_by_leg_psi(self, label, power):
        """Multiply by the psi class of an ambient leg, raised to ``power``."""
        if label not in self.ambient.labels:
            raise ValueError("leg %r is not an ambient label" % label)
        if power < 0:
            raise ValueError("negative psi power")
        if power == 0:
            return self
        out = []
        for coeff, dg in self.terms():
            h = dg.graph.leg_with_label(label)
            exps = list(dg.exponents)
            exps[h] += power
            out.append((coeff, DecoratedGraph(dg.graph, tuple(exps))))
        return Expression(self.ambient, out)

    def relabel_legs(self, mapping):
        """Rename pinned legs; the ambient is rebuilt from the new labels."""
        new_labels = [mapping.get(lab, lab) for lab in self.ambient.labels]
        ambient = make_ambient(self.ambient.genus, new_labels)
        out = []
        for coeff, dg in self.terms():
            g = dg.graph
            labels = tuple(mapping.get(lab, lab) if lab is not None else None
                           for lab in g.labels)
            out.append((coeff, DecoratedGraph(
                type(g)(g.genera, g.vertex_of, g.involution, labels), dg.exponents)))
        return Expression(ambient, out)


def attach_vertex(expr, leg_label, genus_v, legs):
    """Glue a fresh vertex onto the named leg of every term.

    The pinned leg ``leg_label`` becomes one half of a new edge whose other
    half sits on a new vertex of genus ``genus_v`` carrying ``legs`` (pairs
    of label and exponent).  This realizes formal multiplication by a single
    extra bracket factor.
    """
    out = []
    for coeff, dg in expr.terms():
        g = dg.graph
        b = GraphBuilder()
        for genus_w in g.genera:
            b.add_vertex(genus_w)
        new_v = b.add_vertex(genus_v)
        remap = {}
        glue = None
        for h in range(g.n_half_edges):
            if g.labels[h] == leg_label:
                glue = remap[h] = b.add_half(g.vertex_of[h], dg.exponents[h])
            elif g.labels[h] is not None:
                remap[h] = b.add_leg(g.vertex_of[h], g.labels[h], dg.exponents[h])
            else:
                remap[h] = b.add_half(g.vertex_of[h], dg.exponents[h])
        if glue is None:
            raise ValueError("no leg labeled %r" % leg_label)
        for h, p in g.edges():
            b.pair(remap[h], remap[p])
        other = b.add_half(new_v, 0)
        b.pair(glue, other)
        for label, exp in legs:
            b.add_leg(new_v, label, exp)
        out.append((coeff, b.build()))
    return from_terms(out)


def zero(ambient):
    return Expression(ambient, _raw={})


def from_terms(terms, ambient=None):
    """Build an expression, inferring the ambient from the first term."""
    terms = list(terms)
    if ambient is None:
        if not terms:
            raise ValueError("cannot infer the ambient of an empty expression")
        first = terms[0][1]
        ambient = make_ambient(genus(first.graph), first.graph.leg_labels())
    return Expression(ambient, terms)


def ambient_of_graph(dg):
    return make_ambient(genus(dg.graph), dg.graph.leg_labels())


# ---------------------------------------------------------------------------
# bracket grammar


_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<number>\d+)
  | (?P<name>[A-Za-z][A-Za-z0-9_]*\*?)
  | (?P<sym>[<>_()^+\-*/])
""", re.VERBOSE)


def _tokens(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError("bad character %r at position %d" % (text[pos], pos))
        pos = m.end()
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group()))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        kind, tok = self.next()
        if tok != value:
            raise ValueError("expected %r, found %r" % (value, tok))
        return tok

    def parse_expression(self):
        terms = []
        sign = 1
        kind, tok = self.peek()
        if tok in ("+", "-"):
            self.next()
            sign = -1 if tok == "-" else 1
        if self.peek() == ("number", "0") and self.i + 1 == len(self.toks):
            self.next()
            return []
        while True:
            terms.append(self.parse_term(sign))
            kind, tok = self.peek()
            if tok is None:
                return terms
            if tok not in ("+", "-"):
                raise ValueError("expected '+' or '-', found %r" % tok)
            self.next()
            sign = -1 if tok == "-" else 1

    def parse_term(self, sign):
        coeff = Fraction(sign)
        kind, tok = self.peek()
        if kind == "number":
            self.next()
            num = int(tok)
            den = 1
            if self.peek()[1] == "/":
                self.next()
                kind2, tok2 = self.next()
                if kind2 != "number":
                    raise ValueError("malformed rational coefficient")
                den = int(tok2)
            coeff *= Fraction(num, den)
            self.expect("*")
        factors = [self.parse_factor()]
        while self.peek()[1] == "<":
            factors.append(self.parse_factor())
        return coeff, factors

    def parse_factor(self):
        self.expect("<")
        items = []
        while True:
            kind, tok = self.peek()
            if tok == ">":
                self.next()
                break
            if kind != "name":
                raise ValueError("expected a half-edge name, found %r" % tok)
            self.next()
            if tok == "P" and self.peek()[1] == "^":
                self.next()
                kind2, tok2 = self.next()
                if kind2 != "number":
                    raise ValueError("malformed exponent after P^")
                exp = int(tok2)
                self.expect("(")
                kind3, name = self.next()
                if kind3 != "name":
                    raise ValueError("expected a name inside P^k(...)")
                self.expect(")")
                items.append((name, exp))
            else:
                items.append((tok, 0))
        self.expect("_")
        kind, tok = self.next()
        if kind != "number":
            raise ValueError("malformed genus subscript")
        return int(tok), items


_EXTRA_NAME = re.compile(r"^W\d*$")


def _term_graph(factors):
    occurrences = {}
    for v, (genus_v, items) in enumerate(factors):
        for name, exp in items:
            occurrences.setdefault(_pair_base(name), []).append((v, name, exp))
    b = GraphBuilder()
    for genus_v, _items in factors:
        b.add_vertex(genus_v)
    for base, occ in sorted(occurrences.items()):
        if len(occ) == 1:
            v, name, exp = occ[0]
            if name.endswith("*"):
                raise ValueError("unmatched half-edge star %r" % name)
            if _EXTRA_NAME.match(name):
                if exp != 0:
                    raise ValueError("extra leg %r cannot carry an exponent" % name)
                b.add_leg(v, EXTRA, 0)
            else:
                b.add_leg(v, name, exp)
        elif len(occ) == 2:
            (v1, n1, e1), (v2, n2, e2) = occ
            if {n1, n2} != {base, base + "*"}:
                raise ValueError("duplicate leg label %r" % n1)
            b.add_edge(v1, v2, e1, e2)
        else:
            raise ValueError("name %r occurs more than twice" % base)
    return b.build()


def _pair_base(name):
    return name[:-1] if name.endswith("*") else name


def parse_bracket(text, ambient=None):
    """Parse the angle-bracket grammar into an expression.

    Bracket coefficients are Aut-normalized; the stored internal coefficient
    of each parsed term is the printed prefix divided by the automorphism
    order of its graph.
    """
    parsed = _Parser(text).parse_expression()
    terms = []
    for coeff, factors in parsed:
        dg = _term_graph(factors)
        terms.append((coeff / automorphism_order(dg), dg))
    if not terms:
        if ambient is None:
            raise ValueError("cannot infer the ambient of an empty expression")
        return zero(ambient)
    return from_terms(terms, ambient)


_DISPLAY_KIND = {"frozen": 0, "regular": 1, "named": 2}


def _display_layout(dg):
    """Deterministic per-vertex item lists for rendering.

    Internal edges get fresh names g1, g2, ... (skipping any that collide
    with a pinned label); extras are shown as W1, W2, ... per vertex.
    """
    g = dg.graph
    used = {lab for lab in g.labels if lab not in (None, EXTRA)}
    fresh = (name for i in itertools.count(1)
             if (name := "g%d" % i) not in used and name + "*" not in used)
    edge_names = {}
    for h, p in g.edges():
        # unstarred half on the lower vertex id; for loops, higher exponent first
        v1, v2 = g.vertex_of[h], g.vertex_of[p]
        if (v1, -dg.exponents[h]) <= (v2, -dg.exponents[p]):
            first, second = h, p
        else:
            first, second = p, h
        name = next(fresh)
        edge_names[first] = name
        edge_names[second] = name + "*"
    vertices = []
    for v in range(g.n_vertices):
        items = []
        n_extras = 0
        for h in g.halves_at(v):
            lab = g.labels[h]
            if lab == EXTRA:
                n_extras += 1
            elif lab is not None:
                key = (0, _DISPLAY_KIND[leg_kind(lab)], label_sort_key(lab))
                items.append((key, lab, dg.exponents[h]))
            else:
                items.append(((1, 0, (edge_names[h],)), edge_names[h], dg.exponents[h]))
        for j in range(n_extras):
            items.append(((0, 3, ("W", j)), "W%d" % (j + 1), 0))
        items.sort(key=lambda t: t[0])
        vertices.append([(name, exp) for _k, name, exp in items])
    return vertices


def _coefficient_str(coeff):
    if coeff.denominator == 1:
        return str(coeff.numerator)
    return "%d/%d" % (coeff.numerator, coeff.denominator)


def render_bracket(expr):
    """Render in the ASCII bracket grammar with Aut-normalized coefficients."""
    if expr.is_zero():
        return "0"
    chunks = []
    for coeff, dg in expr.terms():
        shown = coeff * automorphism_order(dg)
        body = " ".join(
            "<%s>_%d" % (" ".join(_item_str(name, exp) for name, exp in items),
                         dg.graph.genera[v])
            for v, items in enumerate(_display_layout(dg)))
        mag = abs(shown)
        prefix = "" if mag == 1 else _coefficient_str(mag) + " * "
        chunks.append(("-" if shown < 0 else "+", prefix + body))
    sign, first = chunks[0]
    out = ("-" if sign == "-" else "") + first
    for sign, body in chunks[1:]:
        out += " %s %s" % (sign, body)
    return out


def _item_str(name, exp):
    return name if exp == 0 else "P^%d(%s)" % (exp, name)


_LATEX_NAME = re.compile(r"^([A-Za-z]+)(\d*)(\*?)$")


def _latex_name(name):
    m = _LATEX_NAME.match(name)
    if not m:
        return name
    stem, digits, star = m.groups()
    if stem == "g":
        stem = r"\gamma"
    out = stem
    if digits:
        out += "_{%s}" % digits
    if star:
        out += "^*"
    return out


def render_latex(expr):
    if expr.is_zero():
        return "0"
    chunks = []
    for coeff, dg in expr.terms():
        shown = coeff * automorphism_order(dg)
        body = " ".join(
            r"\left< %s \right>_{%d}" % (
                " ".join(_latex_item(name, exp) for name, exp in items),
                dg.graph.genera[v])
            for v, items in enumerate(_display_layout(dg)))
        mag = abs(shown)
        if mag == 1:
            prefix = ""
        elif mag.denominator == 1:
            prefix = "%d \\, " % mag.numerator
        else:
            prefix = "\\frac{%d}{%d} \\, " % (mag.numerator, mag.denominator)
        chunks.append(("-" if shown < 0 else "+", prefix + body))
    sign, first = chunks[0]
    out = ("-" if sign == "-" else "") + first
    for sign, body in chunks[1:]:
        out += " %s %s" % (sign, body)
    return out


def _latex_item(name, exp):
    tex = _latex_name(name)
    return tex if exp == 0 else r"\Psi^{%d}(%s)" % (exp, tex)


# ---------------------------------------------------------------------------
# JSON serialization


def graph_to_json(dg):
    g = dg.graph
    legs = []
    for h in range(g.n_half_edges):
        lab = g.labels[h]
        if lab is None:
            continue
        kind = leg_kind(lab)
        entry = {"id": h, "kind": kind}
        if kind in ("regular", "frozen"):
            entry["index"] = int(lab[1:])
        elif kind == "named":
            entry["name"] = lab
        legs.append(entry)
    return {
        "vertices": [{"id": v, "genus": g.genera[v]} for v in range(g.n_vertices)],
        "half_edges": [{"id": h, "vertex": g.vertex_of[h], "exponent": dg.exponents[h]}
                       for h in range(g.n_half_edges)],
        "involution": [[h, p] for h, p in g.edges()],
        "legs": legs,
    }


def graph_from_json(data):
    b = GraphBuilder()
    ids = {}
    for entry in data["vertices"]:
        ids[entry["id"]] = b.add_vertex(entry["genus"])
    labels = {}
    for entry in data["legs"]:
        if entry["kind"] == "regular":
            labels[entry["id"]] = "U%d" % entry["index"]
        elif entry["kind"] == "frozen":
            labels[entry["id"]] = "V%d" % entry["index"]
        elif entry["kind"] == "extra":
            labels[entry["id"]] = EXTRA
        else:
            labels[entry["id"]] = entry["name"]
    paired = {h for pair in data["involution"] for h in pair}
    remap = {}
    for entry in sorted(data["half_edges"], key=lambda e: e["id"]):
        h = entry["id"]
        if h in paired:
            remap[h] = b.add_half(ids[entry["vertex"]], entry["exponent"])
        else:
            remap[h] = b.add_leg(ids[entry["vertex"]], labels[h], entry["exponent"])
    for h, p in data["involution"]:
        b.pair(remap[h], remap[p])
    return b.build()


def expression_to_json(expr):
    return {
        "ambient": {"genus": expr.ambient.genus, "labels": list(expr.ambient.labels)},
        "terms": [
            {"coefficient": {"num": c.numerator, "den": c.denominator},
             "graph": graph_to_json(dg)}
            for c, dg in expr.terms()
        ],
    }


def expression_from_json(data):
    ambient = make_ambient(data["ambient"]["genus"], data["ambient"]["labels"])
    terms = [(Fraction(t["coefficient"]["num"], t["coefficient"]["den"]),
              graph_from_json(t["graph"]))
             for t in data["terms"]]
    return Expression(ambient, terms)


def dumps(expr, **kwargs):
    return json.dumps(expression_to_json(expr), sort_keys=True, **kwargs)
