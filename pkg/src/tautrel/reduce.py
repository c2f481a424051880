"""Psi-class elimination, WDVV relations, span certification and integration.

On a genus-0 vertex with at least four half-edges, one power of psi at a
target half-edge equals the sum of all splittings that separate the target
(plus a nonempty companion set) from a chosen partner pair.  On a genus-1
vertex, one power of psi at the target equals the sum of splittings moving
the target and a nonempty companion set onto a genus-0 vertex, plus 1/12
times the bracket class of the vertex with a fresh loop edge, which is 1/24
in the unnormalized internal representation.

WDVV relations arise by splitting a genus-0 vertex of a one-edge-contracted
graph in the two inequivalent ways that separate a chosen quadruple; their
exact rational span certifies vanishing.  Zero certificates are proofs; an
Unknown outcome is not a nonzeroness claim.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

from .graphs import (
    canonical_key,
    contract_edge,
    graph_from_key,
    leg_kind,
    split_vertex,
    with_exponents,
)
from . import graphs
from .expressions import Expression, from_terms, make_ambient


# ---------------------------------------------------------------------------
# single reduction steps


def _single_term(expr):
    terms = expr.terms()
    if len(terms) != 1:
        raise ValueError("expected a single-term expression")
    return terms[0]


def psi_reduce_genus0(expr, vertex, half, partner_pair):
    """Trade one psi power on a genus-0 vertex for boundary splittings.

    The vertex must carry at least four half-edges; ``partner_pair`` names
    the two half-edges kept away from the target on the old vertex.  Every
    choice of partner pair yields an expression equal to the input as a
    class; different choices differ by WDVV relations.
    """
    coeff, dg = _single_term(expr)
    g = dg.graph
    halves = g.halves_at(vertex)
    if g.genera[vertex] != 0:
        raise ValueError("target vertex must have genus 0")
    if len(halves) < 4:
        raise ValueError("genus-0 reduction needs at least 4 half-edges"
                         " (3-pointed psi classes vanish by dimension)")
    if dg.exponents[half] < 1:
        raise ValueError("target half-edge carries no psi class")
    x1, x2 = partner_pair
    if len({half, x1, x2}) != 3 or {x1, x2} - set(halves) or half not in halves:
        raise ValueError("partner pair must be two other half-edges of the vertex")
    lowered = with_exponents(dg, {half: dg.exponents[half] - 1})
    pool = [h for h in halves if h not in (half, x1, x2)]
    out = []
    for r in range(1, len(pool) + 1):
        for companions in itertools.combinations(pool, r):
            side = frozenset({half, *companions})
            out.append((coeff, split_vertex(lowered, vertex, side, 0, 0)))
    return Expression(expr.ambient, out)


def psi_reduce_genus1(expr, vertex, half):
    """Trade one psi power on a genus-1 vertex for splittings plus the loop term.

    The loop term carries the bracket coefficient 1/12, hence 1/24 internally
    because attaching the loop doubles the automorphism count.
    """
    coeff, dg = _single_term(expr)
    g = dg.graph
    halves = g.halves_at(vertex)
    if g.genera[vertex] != 1:
        raise ValueError("target vertex must have genus 1")
    if dg.exponents[half] < 1:
        raise ValueError("target half-edge carries no psi class")
    lowered = with_exponents(dg, {half: dg.exponents[half] - 1})
    pool = [h for h in halves if h != half]
    out = []
    for r in range(1, len(pool) + 1):
        for companions in itertools.combinations(pool, r):
            side = frozenset({half, *companions})
            out.append((coeff, split_vertex(lowered, vertex, side, 0, 1)))
    loop = split_vertex(lowered, vertex, frozenset(halves), 0, 0)
    # the loop split leaves an empty genus-0 vertex; merge it back as a loop
    loop = contract_loopless_stub(loop, vertex)
    out.append((coeff * Fraction(1, 24), loop))
    return Expression(expr.ambient, out)


def contract_loopless_stub(dg, vertex):
    """Turn the (vertex)--(empty stub) edge produced by a full split into a loop."""
    g = dg.graph
    stub = g.n_vertices - 1
    b = graphs.GraphBuilder()
    for v in range(g.n_vertices - 1):
        b.add_vertex(g.genera[v])
    remap = {}
    for h in range(g.n_half_edges):
        v = g.vertex_of[h]
        if v == stub:
            v = vertex
        if g.labels[h] is not None:
            remap[h] = b.add_leg(v, g.labels[h], dg.exponents[h])
        else:
            remap[h] = b.add_half(v, dg.exponents[h])
    for h, p in g.edges():
        b.pair(remap[h], remap[p])
    return b.build()


def choose_partner_pair(dg, vertex, half):
    """Deterministic partner pair: frozen legs first, then any two legs,
    avoiding the two halves of one loop whenever possible."""
    g = dg.graph

    def rank(h):
        lab = g.labels[h]
        if lab is None:
            return (3, (), h)
        kind = leg_kind(lab)
        order = {"frozen": 0, "regular": 1, "named": 2}[kind]
        return (order, graphs.label_sort_key(lab), h)

    candidates = sorted((h for h in g.halves_at(vertex) if h != half), key=rank)
    legs = [h for h in candidates if g.labels[h] is not None]
    if len(legs) >= 2:
        return legs[0], legs[1]
    if len(legs) == 1:
        internal = [h for h in candidates if g.labels[h] is None]
        return legs[0], internal[0]
    for a, b in itertools.combinations(candidates, 2):
        if dg.graph.involution[a] != b:
            return a, b
    return candidates[0], candidates[1]


def _reduction_site(dg):
    """Deterministic choice of (vertex, half) to reduce, or None when psi-free.

    Genus-1 vertices take priority, highest exponent first, then genus-0
    vertices.  Positive exponents on genus >= 2 vertices are unsupported.
    """
    g = dg.graph
    best = None
    for h in range(g.n_half_edges):
        e = dg.exponents[h]
        if e <= 0:
            continue
        v = g.vertex_of[h]
        if g.genera[v] >= 2:
            raise ValueError("psi elimination on genus >= 2 vertices is unsupported")
        priority = (0 if g.genera[v] == 1 else 1, -e, v, h)
        if best is None or priority < best[0]:
            best = (priority, v, h)
    if best is None:
        return None
    return best[1], best[2]


def eliminate_all_psi(expr):
    """Rewrite until no half-edge carries a positive exponent."""
    ambient = expr.ambient
    work = dict(expr._terms)
    done = {}
    while work:
        # deterministic: smallest pending key first
        key = min(work)
        coeff = work.pop(key)
        dg = graph_from_key(key)
        site = _reduction_site(dg)
        if site is None:
            done[key] = done.get(key, Fraction(0)) + coeff
            continue
        v, h = site
        single = Expression(ambient, _raw={key: coeff})
        if dg.graph.genera[v] == 1:
            reduced = psi_reduce_genus1(single, v, h)
        else:
            pair = choose_partner_pair(dg, v, h)
            reduced = psi_reduce_genus0(single, v, h, pair)
        for k, c in reduced._terms.items():
            work[k] = work.get(k, Fraction(0)) + c
            if work[k] == 0:
                del work[k]
    return Expression(ambient, _raw={k: c for k, c in done.items() if c != 0})


def distribute(expr, label):
    """Insert a fresh leg named ``label`` into each vertex in turn and sum."""
    coeff, dg = _single_term(expr)
    if label in dg.graph.labels:
        raise ValueError("name %r already used in the term" % label)
    out = []
    for v in range(dg.graph.n_vertices):
        out.append((coeff, graphs.add_legs(dg, [(v, label, 0)])))
    return from_terms(out)


# ---------------------------------------------------------------------------
# WDVV relations


@dataclass(frozen=True)
class RelationBasis:
    ambient: object
    relations: tuple
    support: frozenset
    rounds: int


def _wdvv_split_sum(dg, vertex, pair_a, pair_b):
    """Sum over splittings separating pair_a from pair_b at a genus-0 vertex."""
    g = dg.graph
    pool = [h for h in g.halves_at(vertex)
            if h not in pair_a and h not in pair_b]
    terms = []
    for r in range(len(pool) + 1):
        for companions in itertools.combinations(pool, r):
            side = frozenset({*pair_a, *companions})
            terms.append((Fraction(1), split_vertex(dg, vertex, side, 0, 0)))
    return terms


def wdvv_relations_at(dg, vertex):
    """All WDVV relation expressions from one genus-0 vertex of ``dg``.

    For each unordered quadruple of half-edges, the two independent exchange
    relations; every relation is an expression that vanishes as a class.
    """
    g = dg.graph
    halves = g.halves_at(vertex)
    if g.genera[vertex] != 0 or len(halves) < 4:
        return []
    if any(dg.exponents[h] for h in range(g.n_half_edges)):
        raise ValueError("WDVV instantiation expects psi-free graphs")
    ambient = make_ambient(graphs.genus(g), g.leg_labels())
    out = []
    for quad in itertools.combinations(sorted(halves), 4):
        a, b, c, d = quad
        base = _wdvv_split_sum(dg, vertex, (a, b), (c, d))
        for other in ((a, c), (b, d)), ((a, d), (b, c)):
            swapped = _wdvv_split_sum(dg, vertex, *other)
            rel = Expression(ambient, base) - Expression(ambient, swapped)
            if not rel.is_zero():
                out.append(rel)
    return out


def _relation_signature(rel):
    items = rel.items()
    lead = items[0][1]
    return tuple((k, c / lead) for k, c in items)


def generate_wdvv_relations(support, ambient, rounds=3, max_relations=200000):
    """Exchange relations reachable from the support within a round budget.

    Each round contracts one edge of every known graph and instantiates the
    exchange relations at every genus-0 vertex of the contraction; graphs
    appearing in new relations join the support for the next round.
    """
    known = set(support)
    processed_sources = set()
    relations = []
    seen_signatures = set()
    rounds_used = 0
    for _round in range(rounds):
        rounds_used += 1
        sources = {}
        for key in sorted(known):
            dg = graph_from_key(key)
            for h, p in dg.graph.edges():
                if dg.graph.vertex_of[h] == dg.graph.vertex_of[p]:
                    continue
                source = contract_edge(dg, h)
                skey = canonical_key(source)
                if skey not in processed_sources:
                    sources[skey] = source
        if not sources:
            break
        new_graphs = False
        for skey in sorted(sources):
            processed_sources.add(skey)
            source = graph_from_key(skey)
            for v in range(source.graph.n_vertices):
                for rel in wdvv_relations_at(source, v):
                    sig = _relation_signature(rel)
                    if sig in seen_signatures:
                        continue
                    seen_signatures.add(sig)
                    relations.append(rel)
                    if len(relations) > max_relations:
                        raise OverflowError(
                            "relation budget exceeded (%d)" % max_relations)
                    for key in rel.support():
                        if key not in known:
                            known.add(key)
                            new_graphs = True
        if not new_graphs:
            break
    return RelationBasis(ambient, tuple(relations), frozenset(known), rounds_used)


# ---------------------------------------------------------------------------
# exact span membership


@dataclass(frozen=True)
class ZeroCertificate:
    zero: bool
    combination: tuple            # ((coefficient, relation index), ...)
    basis: object                 # RelationBasis or None
    budget_spent: int
    reason: str

    def relations_used(self):
        return [(c, self.basis.relations[i]) for c, i in self.combination]


def _solve_exact(columns, target):
    """Solve sum_i x_i * columns_i = target exactly over the rationals.

    Sparse Gaussian elimination on the row (= graph key) equations; returns a
    dict column-index -> coefficient, or None when inconsistent.
    """
    rows = {}
    for j, col in enumerate(columns):
        for key, val in col.items():
            rows.setdefault(key, {})[j] = val
    pivots = []                    # (variable, row dict, rhs)
    pivot_of_var = {}
    for key in sorted(set(rows) | set(target)):
        row = dict(rows.get(key, {}))
        rhs = target.get(key, Fraction(0))
        # reduce against existing pivots
        for var, prow, prhs in pivots:
            if var in row:
                f = row.pop(var)
                for j, val in prow.items():
                    if j == var:
                        continue
                    row[j] = row.get(j, Fraction(0)) - f * val
                    if row[j] == 0:
                        del row[j]
                rhs -= f * prhs
        if not row:
            if rhs != 0:
                return None
            continue
        var = min(row)
        lead = row[var]
        prow = {j: v / lead for j, v in row.items()}
        prhs = rhs / lead
        pivots.append((var, prow, prhs))
        pivot_of_var[var] = (prow, prhs)
    # back substitution, free variables set to zero
    solution = {}
    for var, prow, prhs in reversed(pivots):
        value = prhs
        for j, v in prow.items():
            if j == var:
                continue
            value -= v * solution.get(j, Fraction(0))
        solution[var] = value
    return {j: v for j, v in solution.items() if v != 0}


def _reachable_relations(basis, target_keys):
    """Restrict to the connected component of the target in the incidence graph."""
    by_key = {}
    for i, rel in enumerate(basis.relations):
        for key in rel.support():
            by_key.setdefault(key, []).append(i)
    seen_keys = set()
    seen_rels = set()
    frontier = [k for k in target_keys]
    while frontier:
        key = frontier.pop()
        if key in seen_keys:
            continue
        seen_keys.add(key)
        for i in by_key.get(key, ()):
            if i not in seen_rels:
                seen_rels.add(i)
                frontier.extend(basis.relations[i].support())
    return sorted(seen_rels)


def span_zero_test(expr, budget=3, max_relations=200000):
    """Certify that a psi-free expression is a combination of WDVV relations.

    Escalates the relation-closure round count up to ``budget``; a returned
    Zero certificate is re-verified by substitution before being reported.
    Unknown is a budget-bounded outcome, not a nonzeroness proof.
    """
    if not expr.psi_free():
        raise ValueError("span test requires a psi-free expression")
    if expr.is_zero():
        return ZeroCertificate(True, (), None, 0, "normalizes to zero")
    target = dict(expr._terms)
    for rounds in range(1, budget + 1):
        basis = generate_wdvv_relations(expr.support(), expr.ambient,
                                        rounds=rounds, max_relations=max_relations)
        usable = _reachable_relations(basis, expr.support())
        if not all(any(k in basis.relations[i]._terms for i in usable)
                   for k in target):
            continue
        columns = [dict(basis.relations[i]._terms) for i in usable]
        solution = _solve_exact(columns, target)
        if solution is None:
            continue
        combination = tuple(sorted((v, usable[j]) for j, v in solution.items()))
        # re-substitution check: the certificate must reproduce the input
        total = Expression(expr.ambient, _raw={})
        for c, i in combination:
            total = total + basis.relations[i].scale(c)
        if total != expr:
            raise AssertionError("certificate failed re-substitution")
        return ZeroCertificate(True, combination, basis, rounds, "wdvv-span")
    return ZeroCertificate(False, (), None, budget, "unknown")


# ---------------------------------------------------------------------------
# integration


@lru_cache(maxsize=None)
def genus0_vertex_integral(exponents):
    """Closed form: (a-3)! over the product of exponent factorials."""
    a = len(exponents)
    if a < 3 or sum(exponents) != a - 3:
        return Fraction(0)
    value = Fraction(factorial(a - 3))
    for q in exponents:
        value /= factorial(q)
    return value


@lru_cache(maxsize=None)
def genus1_vertex_integral(exponents):
    """Genus-1 psi integral via the one-step splitting identity.

    The recursion moves the first decorated point onto a genus-0 branch with
    every possible companion set and adds the 1/24 loop contribution.
    """
    a = len(exponents)
    if sum(exponents) != a:
        return Fraction(0)
    target = next(i for i, q in enumerate(exponents) if q > 0)
    rest = [q for i, q in enumerate(exponents) if i != target]
    t = exponents[target] - 1
    total = Fraction(0)
    indices = range(len(rest))
    for r in range(1, len(rest) + 1):
        for companions in itertools.combinations(indices, r):
            side = (t,) + tuple(rest[i] for i in companions) + (0,)
            complement = tuple(rest[i] for i in indices if i not in companions) + (0,)
            total += genus0_vertex_integral(tuple(sorted(side))) \
                * genus1_vertex_integral(tuple(sorted(complement)))
    loop = tuple(sorted((t,) + tuple(rest) + (0, 0)))
    total += Fraction(1, 24) * genus0_vertex_integral(loop)
    return total


def integrate(expr):
    """Integrate a top-degree expression over its ambient space."""
    if expr.is_zero():
        return Fraction(0)
    if expr.degree() != expr.ambient.dimension:
        raise ValueError("degree %d is not the ambient dimension %d"
                         % (expr.degree(), expr.ambient.dimension))
    total = Fraction(0)
    for coeff, dg in expr.terms():
        g = dg.graph
        value = coeff
        for v in range(g.n_vertices):
            exps = tuple(sorted(dg.exponents[h] for h in g.halves_at(v)))
            if g.genera[v] == 0:
                value *= genus0_vertex_integral(exps)
            elif g.genera[v] == 1:
                value *= genus1_vertex_integral(exps)
            else:
                raise ValueError("integration supports vertex genus <= 1 only")
            if value == 0:
                break
        total += value
    return total


def pair_with_psi_monomials(expr):
    """All pairings of the expression against complementary psi monomials.

    Returns (exponent tuple over ambient legs, integral) pairs; a zero class
    pairs to zero against everything.
    """
    labels = expr.ambient.labels
    if expr.is_zero():
        return [((0,) * len(labels), Fraction(0))]
    codim = expr.ambient.dimension - expr.degree()
    if codim < 0:
        raise ValueError("expression degree exceeds the ambient dimension")
    out = []
    for combo in itertools.combinations_with_replacement(range(len(labels)), codim):
        b = [0] * len(labels)
        for i in combo:
            b[i] += 1
        padded = expr
        for lab, power in zip(labels, b):
            if power:
                padded = padded.multiply_by_leg_psi(lab, power)
        out.append((tuple(b), integrate(padded)))
    return out
