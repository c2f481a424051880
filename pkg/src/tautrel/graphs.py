"""Half-edge dual graphs of stable curves.

A dual graph records the combinatorics of a nodal curve: each vertex carries
a genus, an involution pairs half-edges into edges (nodes), and the fixed
points of the involution are legs (marked points).  Leg labels come in four
kinds: regular ``U<i>``, frozen ``V<i>``, arbitrary named labels, and
anonymous extra legs which all share the label ``W``.  Pinned labels
(regular/frozen/named) must be preserved by isomorphisms; extra legs and
internal half-edge identities are freely interchangeable.  ``canonical_key``
realizes exactly that identification and everything downstream (term
collection, rendering, serialization) keys on it.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

EXTRA = "W"

_KIND_ORDER = {"regular": 0, "frozen": 1, "named": 2, "extra": 3}


def leg_kind(label):
    """Classify a leg label: ``U<i>`` regular, ``V<i>`` frozen, ``W`` extra, else named."""
    if label == EXTRA:
        return "extra"
    if len(label) > 1 and label[0] == "U" and label[1:].isdigit():
        return "regular"
    if len(label) > 1 and label[0] == "V" and label[1:].isdigit():
        return "frozen"
    return "named"


def label_sort_key(label):
    kind = leg_kind(label)
    if kind in ("regular", "frozen"):
        return (_KIND_ORDER[kind], int(label[1:]), label)
    return (_KIND_ORDER[kind], 0, label)


@dataclass(frozen=True)
class DualGraph:
    """Immutable half-edge structure.

    ``genera[v]`` is the genus of vertex ``v``; half-edge ``h`` is attached to
    ``vertex_of[h]``; ``involution[h]`` is its partner (itself for a leg);
    ``labels[h]`` is the leg label, or ``None`` for an internal half-edge.
    """

    genera: tuple
    vertex_of: tuple
    involution: tuple
    labels: tuple

    @property
    def n_vertices(self):
        return len(self.genera)

    @property
    def n_half_edges(self):
        return len(self.vertex_of)

    def halves_at(self, v):
        return [h for h, w in enumerate(self.vertex_of) if w == v]

    def is_leg(self, h):
        return self.involution[h] == h

    def edges(self):
        """Internal edges as (h, involution[h]) pairs with h < partner."""
        return [(h, self.involution[h]) for h in range(self.n_half_edges)
                if self.involution[h] > h]

    def n_edges(self):
        return len(self.edges())

    def leg_labels(self):
        """Sorted non-extra leg labels."""
        out = [lab for lab in self.labels if lab is not None and lab != EXTRA]
        return sorted(out, key=label_sort_key)

    def extra_count(self, v):
        return sum(1 for h in self.halves_at(v) if self.labels[h] == EXTRA)

    def leg_with_label(self, label):
        for h, lab in enumerate(self.labels):
            if lab == label:
                return h
        raise KeyError(label)


@dataclass(frozen=True)
class DecoratedGraph:
    """A dual graph plus one nonnegative psi exponent per half-edge."""

    graph: DualGraph
    exponents: tuple

    def exponent(self, h):
        return self.exponents[h]

    def psi_degree(self):
        return sum(self.exponents)

    def degree(self):
        """Complex cohomological degree of the pushed-forward class."""
        return self.graph.n_edges() + sum(self.exponents)

    def vertex_psi_degree(self, v):
        return sum(self.exponents[h] for h in self.graph.halves_at(v))


def validate(graph):
    """Return the list of violated invariants (empty list means valid)."""
    violations = []
    nv, nh = graph.n_vertices, graph.n_half_edges
    if nv == 0:
        return ["no vertices"]
    if len(graph.involution) != nh or len(graph.labels) != nh:
        return ["inconsistent array lengths"]
    for h in range(nh):
        p = graph.involution[h]
        if not (0 <= p < nh) or graph.involution[p] != h:
            violations.append("not an involution")
            break
    for h in range(nh):
        if not 0 <= graph.vertex_of[h] < nv:
            violations.append("half-edge attached to missing vertex")
            break
    for h in range(nh):
        fixed = graph.involution[h] == h
        labeled = graph.labels[h] is not None
        if fixed != labeled:
            violations.append("legs and involution fixed points disagree")
            break
    seen = set()
    for lab in graph.labels:
        if lab is None or lab == EXTRA:
            continue
        if lab in seen:
            violations.append("duplicate leg label %r" % lab)
        seen.add(lab)
    if any(g < 0 for g in graph.genera):
        violations.append("negative genus")
    # connectivity over edges
    reached = {0}
    frontier = [0]
    adjacency = {v: set() for v in range(nv)}
    for h, p in graph.edges():
        adjacency[graph.vertex_of[h]].add(graph.vertex_of[p])
        adjacency[graph.vertex_of[p]].add(graph.vertex_of[h])
    while frontier:
        v = frontier.pop()
        for w in adjacency[v]:
            if w not in reached:
                reached.add(w)
                frontier.append(w)
    if len(reached) != nv:
        violations.append("disconnected")
    return violations


def genus(graph):
    """1 + #edges - #vertices + sum of vertex genera."""
    return 1 + graph.n_edges() - graph.n_vertices + sum(graph.genera)


def is_stable(graph_or_decorated):
    g = graph_or_decorated.graph if isinstance(graph_or_decorated, DecoratedGraph) else graph_or_decorated
    counts = Counter(g.vertex_of)
    return all(2 * g.genera[v] - 2 + counts.get(v, 0) > 0 for v in range(g.n_vertices))


class GraphBuilder:
    """Mutable accumulator used by the parser and by graph surgery."""

    def __init__(self):
        self.genera = []
        self.vertex_of = []
        self.labels = []
        self.exponents = []
        self.pairs = []

    def add_vertex(self, genus):
        self.genera.append(genus)
        return len(self.genera) - 1

    def add_leg(self, v, label, exponent=0):
        h = len(self.vertex_of)
        self.vertex_of.append(v)
        self.labels.append(label)
        self.exponents.append(exponent)
        return h

    def add_half(self, v, exponent=0):
        h = len(self.vertex_of)
        self.vertex_of.append(v)
        self.labels.append(None)
        self.exponents.append(exponent)
        return h

    def add_edge(self, v1, v2, exp1=0, exp2=0):
        h1 = self.add_half(v1, exp1)
        h2 = self.add_half(v2, exp2)
        self.pairs.append((h1, h2))
        return h1, h2

    def pair(self, h1, h2):
        self.pairs.append((h1, h2))

    def build(self):
        nh = len(self.vertex_of)
        involution = list(range(nh))
        for h1, h2 in self.pairs:
            involution[h1], involution[h2] = h2, h1
        graph = DualGraph(tuple(self.genera), tuple(self.vertex_of),
                          tuple(involution), tuple(self.labels))
        return DecoratedGraph(graph, tuple(self.exponents))


# ---------------------------------------------------------------------------
# canonical forms


def _base_classes(dg):
    g = dg.graph
    nv = g.n_vertices
    extras = [0] * nv
    legsig = [[] for _ in range(nv)]
    intexp = [[] for _ in range(nv)]
    for h in range(g.n_half_edges):
        v = g.vertex_of[h]
        lab = g.labels[h]
        if lab == EXTRA:
            if dg.exponents[h] != 0:
                raise ValueError("extra legs cannot carry psi exponents")
            extras[v] += 1
        elif lab is not None:
            legsig[v].append((lab, dg.exponents[h]))
        else:
            intexp[v].append(dg.exponents[h])
    return [(g.genera[v], extras[v], tuple(sorted(legsig[v])), tuple(sorted(intexp[v])))
            for v in range(nv)]


def _refined_groups(dg):
    """Vertex groups under iterated neighborhood refinement, in canonical order.

    Refinement only ever splits groups and is isomorphism-invariant, so
    restricting the canonical search to within-group permutations is sound.
    """
    g = dg.graph
    nv = g.n_vertices
    base = _base_classes(dg)
    val = list(base)
    internal = [h for h in range(g.n_half_edges)
                if g.involution[h] != h]
    at = [[] for _ in range(nv)]
    for h in internal:
        at[g.vertex_of[h]].append(h)

    def partition(values):
        groups = {}
        for v, value in enumerate(values):
            groups.setdefault(value, []).append(v)
        return sorted(frozenset(vs) for vs in groups.values())

    while True:
        new = []
        for v in range(nv):
            nbr = tuple(sorted(
                (dg.exponents[h], dg.exponents[g.involution[h]], val[g.vertex_of[g.involution[h]]])
                for h in at[v]))
            new.append((val[v], nbr))
        if partition(new) == partition(val):
            break
        val = new
    groups = {}
    for v in range(nv):
        groups.setdefault(val[v], []).append(v)
    ordered = [sorted(groups[value]) for value in sorted(groups)]
    return base, ordered


def _edge_data(dg):
    g = dg.graph
    return [(g.vertex_of[h], dg.exponents[h], g.vertex_of[p], dg.exponents[p])
            for h, p in g.edges()]


@lru_cache(maxsize=None)
def canonical_key(dg):
    """Total invariant of a decorated graph up to label-fixing isomorphism.

    Two decorated graphs get equal keys exactly when some isomorphism matches
    them fixing every regular/frozen/named leg label; internal half-edges and
    extra legs may be renamed freely.  The key is self-describing: it lists
    per-vertex data (genus, extra-leg count, decorated legs) in a canonical
    vertex order together with the multiset of decorated edge records, so the
    graph can be rebuilt from it (see ``graph_from_key``).
    """
    base, groups = _refined_groups(dg)
    edges = _edge_data(dg)
    order = [v for grp in groups for v in grp]
    vpart = tuple(base[v] for v in order)
    best = None
    for combo in itertools.product(*(itertools.permutations(grp) for grp in groups)):
        pos = {}
        i = 0
        for grp in combo:
            for v in grp:
                pos[v] = i
                i += 1
        recs = tuple(sorted(
            tuple(sorted(((pos[v1], e1), (pos[v2], e2))))
            for v1, e1, v2, e2 in edges))
        if best is None or recs < best:
            best = recs
    return (vpart, best)


@lru_cache(maxsize=None)
def graph_from_key(key):
    """Rebuild the canonical representative graph described by a key."""
    vpart, recs = key
    b = GraphBuilder()
    for genus_v, _extras, legsig, _intexp in vpart:
        v = b.add_vertex(genus_v)
        for label, exp in legsig:
            b.add_leg(v, label, exp)
    for (v1, e1), (v2, e2) in recs:
        b.add_edge(v1, v2, e1, e2)
    for v, (_g, extras, _l, _i) in enumerate(vpart):
        for _ in range(extras):
            b.add_leg(v, EXTRA, 0)
    return b.build()


def canonical_form(dg):
    return graph_from_key(canonical_key(dg))


@lru_cache(maxsize=None)
def automorphism_order(dg):
    """Order of the decoration-preserving automorphism group.

    Regular, frozen and named legs are fixed pointwise; internal half-edges
    may permute.  Extra legs are treated as a per-vertex multiplicity and are
    never a symmetry source.
    """
    _base, groups = _refined_groups(dg)
    edges = _edge_data(dg)
    recs = [tuple(sorted(((v1, e1), (v2, e2)))) for v1, e1, v2, e2 in edges]
    counts = Counter(recs)
    per_valid = 1
    for m in counts.values():
        per_valid *= factorial(m)
    per_valid *= 2 ** sum(1 for r in recs if r[0] == r[1])
    valid = 0
    for combo in itertools.product(*(itertools.permutations(grp) for grp in groups)):
        pi = {}
        for grp, image in zip(groups, combo):
            for v, w in zip(grp, image):
                pi[v] = w
        mapped = Counter(tuple(sorted(((pi[v1], e1), (pi[v2], e2))))
                         for v1, e1, v2, e2 in edges)
        if mapped == counts:
            valid += 1
    return valid * per_valid


# ---------------------------------------------------------------------------
# graph surgery (all functions return fresh graphs; inputs are never mutated)


def _rebuild(dg, keep, reattach=None, genera=None, new_edges=(), new_legs=(),
             exponent_override=None):
    """Copy ``dg`` keeping half-edges in ``keep`` (a sorted list).

    ``reattach`` maps old vertex id -> new vertex id, ``genera`` is the new
    genus list, ``new_edges``/(v1,v2,e1,e2) and ``new_legs``/(v,label,exp) are
    appended, ``exponent_override`` maps old half-edge id -> new exponent.
    """
    g = dg.graph
    b = GraphBuilder()
    for genus_v in (genera if genera is not None else g.genera):
        b.add_vertex(genus_v)
    remap = {}
    for h in keep:
        v = g.vertex_of[h]
        v = reattach[v] if reattach else v
        exp = dg.exponents[h]
        if exponent_override and h in exponent_override:
            exp = exponent_override[h]
        if g.labels[h] is not None:
            remap[h] = b.add_leg(v, g.labels[h], exp)
        else:
            remap[h] = b.add_half(v, exp)
    for h, p in g.edges():
        if h in remap and p in remap:
            b.pair(remap[h], remap[p])
    for v, label, exp in new_legs:
        b.add_leg(v, label, exp)
    for v1, v2, e1, e2 in new_edges:
        b.add_edge(v1, v2, e1, e2)
    return b.build()


def delete_legs(dg, legs, exponent_override=None):
    legs = set(legs)
    for h in legs:
        if not dg.graph.is_leg(h):
            raise ValueError("can only delete legs, not edge halves")
    keep = [h for h in range(dg.graph.n_half_edges) if h not in legs]
    return _rebuild(dg, keep, exponent_override=exponent_override)


def add_legs(dg, new_legs):
    keep = list(range(dg.graph.n_half_edges))
    return _rebuild(dg, keep, new_legs=new_legs)


def with_exponents(dg, override):
    keep = list(range(dg.graph.n_half_edges))
    return _rebuild(dg, keep, exponent_override=dict(override))


def split_vertex(dg, v, side, genus_a, genus_b, exp_a=0, exp_b=0):
    """Split vertex ``v`` into two vertices joined by a fresh edge.

    Half-edges in ``side`` stay on the first new vertex (which keeps id
    ``v`` and genus ``genus_a``); the rest move to an appended vertex of
    genus ``genus_b``.  The fresh edge halves carry ``exp_a``/``exp_b``.
    """
    g = dg.graph
    side = set(side)
    halves = set(g.halves_at(v))
    if not side <= halves:
        raise ValueError("side must consist of half-edges at the split vertex")
    nv = g.n_vertices
    genera = list(g.genera)
    genera[v] = genus_a
    genera.append(genus_b)
    b = GraphBuilder()
    for genus_v in genera:
        b.add_vertex(genus_v)
    remap = {}
    for h in range(g.n_half_edges):
        w = g.vertex_of[h]
        if w == v:
            w = v if h in side else nv
        if g.labels[h] is not None:
            remap[h] = b.add_leg(w, g.labels[h], dg.exponents[h])
        else:
            remap[h] = b.add_half(w, dg.exponents[h])
    for h, p in g.edges():
        b.pair(remap[h], remap[p])
    b.add_edge(v, nv, exp_a, exp_b)
    return b.build()


def contract_edge(dg, h):
    """Contract a non-loop edge, merging its endpoints (genera add)."""
    g = dg.graph
    p = g.involution[h]
    if p == h:
        raise ValueError("cannot contract a leg")
    v, w = g.vertex_of[h], g.vertex_of[p]
    if v == w:
        raise ValueError("cannot contract a loop edge")
    lo, hi = min(v, w), max(v, w)
    genera = []
    reattach = {}
    for u in range(g.n_vertices):
        if u == hi:
            reattach[u] = lo
            continue
        reattach[u] = len(genera)
        genera.append(g.genera[u] + (g.genera[hi] if u == lo else 0))
    # fix lo's slot when hi < positions shift
    keep = [x for x in range(g.n_half_edges) if x not in (h, p)]
    return _rebuild(dg, keep, reattach=reattach, genera=genera)


# ---------------------------------------------------------------------------
# rooted trees


class RootedTreeView:
    """A dual graph certified as a rooted tree, with level bookkeeping.

    Levels start at 1 on the root and grow by 1 along each edge away from it.
    A top vertex is a leaf of the rooted tree; the branching height is the
    lowest level carrying a vertex with at least two positively directed
    half-edges (child edges or regular legs), or ``None`` when no such vertex
    exists.
    """

    def __init__(self, graph, root=0):
        if isinstance(graph, DecoratedGraph):
            graph = graph.graph
        problems = validate(graph)
        if problems:
            raise ValueError("invalid graph: %s" % "; ".join(problems))
        if graph.n_edges() != graph.n_vertices - 1:
            raise ValueError("not a tree (first Betti number nonzero)")
        self.graph = graph
        self.root = root
        level = {root: 1}
        parent_half = {root: None}
        children = {v: [] for v in range(graph.n_vertices)}
        frontier = [root]
        while frontier:
            v = frontier.pop(0)
            for h in graph.halves_at(v):
                p = graph.involution[h]
                if p == h:
                    continue
                w = graph.vertex_of[p]
                if w not in level:
                    level[w] = level[v] + 1
                    parent_half[w] = p
                    children[v].append((h, w))
                    frontier.append(w)
        self.level = level
        self.parent_half = parent_half
        self.children = children
        for h, lab in enumerate(graph.labels):
            if lab is not None and leg_kind(lab) == "frozen" and graph.vertex_of[h] != root:
                raise ValueError("frozen leg %s not attached to the root" % lab)

    @property
    def top_vertices(self):
        return {v for v in range(self.graph.n_vertices) if not self.children[v]}

    def regular_legs_at(self, v):
        return [h for h in self.graph.halves_at(v)
                if self.graph.labels[h] is not None
                and leg_kind(self.graph.labels[h]) == "regular"]

    def positively_directed(self, v):
        """Child edge halves and regular legs at ``v``."""
        out = [h for h, _w in self.children[v]]
        out.extend(self.regular_legs_at(v))
        return out

    @property
    def branching_height(self):
        heights = [self.level[v] for v in range(self.graph.n_vertices)
                   if len(self.positively_directed(v)) >= 2]
        return min(heights) if heights else None


def is_balanced(tree):
    """Root has no extra legs and every other vertex has at least one."""
    g = tree.graph
    for v in range(g.n_vertices):
        n_extras = g.extra_count(v)
        if v == tree.root and n_extras > 0:
            return False
        if v != tree.root and n_extras == 0:
            return False
    return True


def is_nondegenerate(tree):
    """Still stable after deleting all extra legs."""
    g = tree.graph
    for v in range(g.n_vertices):
        degree = len(g.halves_at(v)) - g.extra_count(v)
        if 2 * g.genera[v] - 2 + degree <= 0:
            return False
    return True
