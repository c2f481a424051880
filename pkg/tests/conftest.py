"""Shared helpers: independent oracles used to freeze expected values.

Everything here deliberately avoids the code paths under test: automorphism
counts come from raw permutation search, genus-0 integrals from the
string-equation recursion, genus-1 integrals from string plus dilaton
anchored at 1/24, and tree shapes from exhaustive parent-array enumeration.
"""

from __future__ import annotations

import itertools
import os
from fractions import Fraction
from functools import lru_cache

import pytest

from tautrel.graphs import (
    EXTRA,
    DecoratedGraph,
    DualGraph,
    GraphBuilder,
    canonical_key,
    leg_kind,
)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_text(name):
    with open(os.path.join(FIXTURES, name + ".bracket")) as fh:
        return fh.read()


@pytest.fixture
def fixtures():
    return fixture_text


# ---------------------------------------------------------------------------
# random graphs and relabelings


def random_decorated_graph(rng, max_vertices=4, with_extras=True):
    b = GraphBuilder()
    nv = rng.randint(1, max_vertices)
    for _ in range(nv):
        b.add_vertex(rng.randint(0, 2))
    for v in range(1, nv):
        b.add_edge(rng.randrange(v), v, rng.randint(0, 2), rng.randint(0, 2))
    if rng.random() < 0.5:
        v, w = rng.randrange(nv), rng.randrange(nv)
        b.add_edge(v, w, rng.randint(0, 2), rng.randint(0, 2))
    for i in range(1, rng.randint(1, 3) + 1):
        b.add_leg(rng.randrange(nv), "U%d" % i, rng.randint(0, 2))
    if rng.random() < 0.5:
        b.add_leg(rng.randrange(nv), "V1", rng.randint(0, 2))
    if with_extras:
        for _ in range(rng.randint(0, 2)):
            b.add_leg(rng.randrange(nv), EXTRA, 0)
    return b.build()


def relabeled(dg, rng):
    """The same graph with vertices and half-edges renamed at random."""
    g = dg.graph
    vperm = list(range(g.n_vertices))
    hperm = list(range(g.n_half_edges))
    rng.shuffle(vperm)
    rng.shuffle(hperm)
    nh = g.n_half_edges
    vertex_of = [0] * nh
    labels = [None] * nh
    exps = [0] * nh
    involution = [0] * nh
    for h in range(nh):
        vertex_of[hperm[h]] = vperm[g.vertex_of[h]]
        labels[hperm[h]] = g.labels[h]
        exps[hperm[h]] = dg.exponents[h]
        involution[hperm[h]] = hperm[g.involution[h]]
    genera = [0] * g.n_vertices
    for v in range(g.n_vertices):
        genera[vperm[v]] = g.genera[v]
    return DecoratedGraph(
        DualGraph(tuple(genera), tuple(vertex_of), tuple(involution), tuple(labels)),
        tuple(exps))


def brute_force_automorphism_order(dg):
    """Count decoration-preserving half-edge permutations directly."""
    g = dg.graph
    halves = [h for h in range(g.n_half_edges) if g.labels[h] != EXTRA]
    extras = {v: g.extra_count(v) for v in range(g.n_vertices)}
    count = 0
    for perm in itertools.permutations(halves):
        f = dict(zip(halves, perm))
        if any(g.labels[f[h]] != g.labels[h] or dg.exponents[f[h]] != dg.exponents[h]
               for h in halves):
            continue
        if any((g.involution[h] in f and f[g.involution[h]] != g.involution[f[h]])
               for h in halves):
            continue
        pi = {}
        ok = True
        for h in halves:
            v, w = g.vertex_of[h], g.vertex_of[f[h]]
            if pi.setdefault(v, w) != w:
                ok = False
                break
        if not ok:
            continue
        if len(set(pi.values())) != len(pi):
            continue
        if any(g.genera[v] != g.genera[w] or extras[v] != extras[w]
               for v, w in pi.items()):
            continue
        count += 1
    # vertices without half-edges can permute freely among equals
    bare = [v for v in range(g.n_vertices) if not g.halves_at(v)]
    groups = {}
    for v in bare:
        groups.setdefault((g.genera[v], extras[v]), []).append(v)
    for vs in groups.values():
        for k in range(2, len(vs) + 1):
            count *= k
    return count


# ---------------------------------------------------------------------------
# integration oracles


@lru_cache(maxsize=None)
def genus0_integral_by_string(exps):
    """Genus-0 psi integral computed purely by the string-equation recursion."""
    exps = tuple(sorted(exps))
    n = len(exps)
    if n < 3 or sum(exps) != n - 3:
        return Fraction(0)
    if n == 3:
        return Fraction(1)
    rest = list(exps[1:])  # exps[0] == 0 in top degree with n > 3
    assert exps[0] == 0
    total = Fraction(0)
    for i, q in enumerate(rest):
        if q >= 1:
            dropped = tuple(rest[:i] + [q - 1] + rest[i + 1:])
            total += genus0_integral_by_string(dropped)
    return total


@lru_cache(maxsize=None)
def genus1_integral_by_string_dilaton(exps):
    """Genus-1 psi integral from string + dilaton, anchored at 1/24."""
    exps = tuple(sorted(exps))
    n = len(exps)
    if sum(exps) != n:
        return Fraction(0)
    if n == 1:
        return Fraction(1, 24)
    if exps[0] == 0:
        rest = list(exps[1:])
        total = Fraction(0)
        for i, q in enumerate(rest):
            if q >= 1:
                dropped = tuple(rest[:i] + [q - 1] + rest[i + 1:])
                total += genus1_integral_by_string_dilaton(dropped)
        return total
    # all exponents positive and summing to n forces all ones: dilaton
    return (n - 1) * genus1_integral_by_string_dilaton((1,) * (n - 1))


# ---------------------------------------------------------------------------
# exhaustive shape oracle


def brute_force_shape_keys(genus_value, n_regular, n_frozen):
    """Shape keys by exhaustive search over parent arrays, genera and legs."""
    max_vertices = n_regular + n_frozen + 2 * genus_value - 2
    keys = set()
    for nv in range(1, max_vertices + 1):
        for parents in itertools.product(*(range(i) for i in range(1, nv))):
            for genera in itertools.product(range(genus_value + 1), repeat=nv):
                if sum(genera) != genus_value:
                    continue
                for placement in itertools.product(range(nv), repeat=n_regular):
                    b = GraphBuilder()
                    for g0 in genera:
                        b.add_vertex(g0)
                    children = {v: [] for v in range(nv)}
                    for child, parent in enumerate(parents, start=1):
                        b.add_edge(parent, child)
                        children[parent].append(child)
                    for i, v in enumerate(placement, start=1):
                        b.add_leg(v, "U%d" % i)
                    for j in range(1, n_frozen + 1):
                        b.add_leg(0, "V%d" % j)
                    dg = b.build()
                    g = dg.graph
                    counts = [len(g.halves_at(v)) for v in range(nv)]
                    if any(2 * genera[v] - 2 + counts[v] <= 0 for v in range(nv)):
                        continue
                    leaf_ok = all(
                        children[v] or any(
                            g.labels[h] is not None and leg_kind(g.labels[h]) == "regular"
                            for h in g.halves_at(v))
                        for v in range(nv))
                    if not leaf_ok:
                        continue
                    keys.add(canonical_key(dg))
    return keys
