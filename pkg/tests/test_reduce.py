import itertools
from fractions import Fraction

import pytest

from tautrel.expressions import parse_bracket
from tautrel.reduce import (
    choose_partner_pair,
    distribute,
    eliminate_all_psi,
    generate_wdvv_relations,
    genus0_vertex_integral,
    genus1_vertex_integral,
    integrate,
    pair_with_psi_monomials,
    psi_reduce_genus0,
    psi_reduce_genus1,
    span_zero_test,
)

from conftest import (
    fixture_text,
    genus0_integral_by_string,
    genus1_integral_by_string_dilaton,
)


def half_by_label(expr, label):
    (_c, dg), = expr.terms()
    return dg.graph.leg_with_label(label)


def certified_zero(expr, budget=3):
    reduced = eliminate_all_psi(expr)
    if reduced.is_zero():
        return True
    return span_zero_test(reduced, budget=budget).zero


# ---------------------------------------------------------------------------
# single steps


def test_genus0_reduce_four_points():
    e = parse_bracket("<P^1(x1) x2 x3 x4>_0")
    h = {lab: half_by_label(e, lab) for lab in ("x1", "x2", "x3", "x4")}
    out = psi_reduce_genus0(e, 0, h["x1"], (h["x3"], h["x4"]))
    assert out == parse_bracket("<x1 x2 a>_0 <a* x3 x4>_0")


def test_genus0_reduce_five_points():
    e = parse_bracket("<P^1(x1) x2 x3 x4 x5>_0")
    h = {lab: half_by_label(e, lab) for lab in ("x1", "x2", "x3", "x4", "x5")}
    out = psi_reduce_genus0(e, 0, h["x1"], (h["x4"], h["x5"]))
    assert out == parse_bracket(
        "<x1 x2 a>_0 <a* x3 x4 x5>_0 + <x1 x3 a>_0 <a* x2 x4 x5>_0"
        " + <x1 x2 x3 a>_0 <a* x4 x5>_0")


def test_genus0_reduce_preconditions():
    e = parse_bracket("<P^1(x1) x2 x3 x4>_0")
    h = {lab: half_by_label(e, lab) for lab in ("x1", "x2", "x3", "x4")}
    with pytest.raises(ValueError):
        psi_reduce_genus0(e, 0, h["x2"], (h["x3"], h["x4"]))  # bare target
    small = parse_bracket("<x1 x2 a>_0 <a* P^1(x3) x4>_1")
    hs = half_by_label(small, "x3")
    with pytest.raises(ValueError):
        psi_reduce_genus0(small, 0, hs, (0, 1))  # three-pointed vertex


def test_genus1_reduce_base_case():
    e = parse_bracket("<P^1(x1)>_1")
    out = psi_reduce_genus1(e, 0, half_by_label(e, "x1"))
    assert out == parse_bracket("1/12 * <x1 a a*>_0")
    (coeff, _dg), = out.terms()
    assert coeff == Fraction(1, 24)


def test_genus1_reduce_two_points():
    e = parse_bracket("<P^1(x1) x2>_1")
    out = psi_reduce_genus1(e, 0, half_by_label(e, "x1"))
    assert out == parse_bracket("<x1 x2 a>_0 <a*>_1 + 1/12 * <x1 x2 a a*>_0")


def test_genus1_reduce_matches_two_point_identity():
    # iterating on the squared exponent reproduces the three-point identity
    lhs = eliminate_all_psi(parse_bracket("<P^2(x1) x2 x3>_1"))
    rhs = parse_bracket(
        "<x1 x2 a>_0 <a* x3 b>_0 <b*>_1 + 1/12 * <P^1(x1) x2 x3 a a*>_0")
    assert certified_zero(lhs - eliminate_all_psi(rhs))


def test_seven_term_tail_cancellation():
    tail = parse_bracket(
        "- <V1 V2 P^1(U2) a>_0 <a* P^1(U1)>_1"
        " + <V1 V2 a>_0 <a* U2 b>_0 <b* P^1(U1)>_1")
    assert eliminate_all_psi(tail).is_zero()


def test_eliminate_rejects_decorated_high_genus():
    with pytest.raises(ValueError):
        eliminate_all_psi(parse_bracket("<P^1(x1) x2>_2"))


def test_eliminate_psi_free_identity():
    e = parse_bracket(fixture_text("f"))
    assert eliminate_all_psi(e) == e


def test_eliminate_double_psi_five_points():
    out = eliminate_all_psi(parse_bracket("<P^1(x1) P^1(x2) x3 x4 x5>_0"))
    expected = parse_bracket("2 * <x1 x2 a*>_0 <a x3 b*>_0 <b x4 x5>_0")
    assert out.psi_free()
    assert certified_zero(out - expected)


def test_partner_pair_prefers_frozen_then_legs():
    e = parse_bracket("<V1 V2 P^1(U2) a>_0 <a* P^2(U1)>_1")
    (_c, dg), = e.terms()
    target = dg.graph.leg_with_label("U2")
    pair = choose_partner_pair(dg, 0, target)
    labels = {dg.graph.labels[h] for h in pair}
    assert labels == {"V1", "V2"}


def test_partner_pair_avoids_loop_halves():
    e = parse_bracket("<P^1(x1) b a a*>_0 <b* x2 x3>_0")
    (_c, dg), = e.terms()
    target = dg.graph.leg_with_label("x1")
    pair = choose_partner_pair(dg, 0, target)
    assert dg.graph.involution[pair[0]] != pair[1]


# ---------------------------------------------------------------------------
# distribute and WDVV generation


def test_distribute_two_factors():
    e = parse_bracket("<x1 x2 a>_0 <a* x3 x4>_0")
    out = distribute(e, "x5")
    assert out == parse_bracket(
        "<x1 x2 x5 a>_0 <a* x3 x4>_0 + <x1 x2 a>_0 <a* x3 x4 x5>_0")


def test_distribute_single_factor_and_collision():
    e = parse_bracket("<x1 x2 x3 x4>_0")
    assert distribute(e, "x5") == parse_bracket("<x1 x2 x3 x4 x5>_0")
    with pytest.raises(ValueError):
        distribute(e, "x1")


def test_distributed_four_point_difference_is_five_point_relation():
    lhs = distribute(parse_bracket("<x1 x2 a>_0 <a* x3 x4>_0"), "x5")
    rhs = distribute(parse_bracket("<x1 x3 a>_0 <a* x2 x4>_0"), "x5")
    diff = lhs - rhs
    support = parse_bracket("<x1 x2 a>_0 <a* x3 x4 x5>_0").support()
    basis = generate_wdvv_relations(support, lhs.ambient, rounds=1)
    sigs = {tuple(sorted(rel.items())) for rel in basis.relations}
    assert tuple(sorted(diff.items())) in sigs or \
        tuple(sorted(diff.scale(-1).items())) in sigs


def test_wdvv_four_points():
    support = parse_bracket("<x1 x2 a>_0 <a* x3 x4>_0").support()
    ambient = parse_bracket("<x1 x2 a>_0 <a* x3 x4>_0").ambient
    basis = generate_wdvv_relations(support, ambient, rounds=1)
    assert len(basis.relations) == 2
    assert all(len(rel) == 2 for rel in basis.relations)
    # the relations identify all three pairings of the four labels
    d12 = parse_bracket("<x1 x2 a>_0 <a* x3 x4>_0")
    d13 = parse_bracket("<x1 x3 a>_0 <a* x2 x4>_0")
    d14 = parse_bracket("<x1 x4 a>_0 <a* x2 x3>_0")
    assert certified_zero(d12 - d13, budget=1)
    assert certified_zero(d12 - d14, budget=1)


def test_wdvv_empty_support():
    ambient = parse_bracket("<x1 x2 x3 x4>_0").ambient
    basis = generate_wdvv_relations(frozenset(), ambient, rounds=2)
    assert basis.relations == ()


def test_chain_class_is_symmetric_modulo_relations():
    chain = parse_bracket("<x1 x2 a>_0 <a* x3 b>_0 <b* x4 x5>_0")
    for sigma in [{"x1": "x3", "x3": "x1"}, {"x2": "x5", "x5": "x2"},
                  {"x1": "x2", "x2": "x3", "x3": "x1"}]:
        assert certified_zero(chain - chain.relabel_legs(sigma), budget=2)


def test_span_budget_escalation():
    chain = parse_bracket("<x1 x2 a>_0 <a* x3 b>_0 <b* x4 x5>_0")
    swapped = chain.relabel_legs({"x2": "x5", "x5": "x2"})
    diff = chain - swapped
    assert not span_zero_test(diff, budget=1).zero
    cert = span_zero_test(diff, budget=3)
    assert cert.zero and cert.budget_spent == 2


def test_relations_pair_to_zero():
    support = parse_bracket("<x1 x2 a>_0 <a* x3 x4 x5>_0").support()
    ambient = parse_bracket("<x1 x2 a>_0 <a* x3 x4 x5>_0").ambient
    basis = generate_wdvv_relations(support, ambient, rounds=1)
    for rel in basis.relations[:10]:
        assert all(v == 0 for _b, v in pair_with_psi_monomials(rel))


def test_relations_with_genus1_spectators_pair_to_zero():
    from tautrel.treeclass import weighted_tree_class
    reduced = eliminate_all_psi(weighted_tree_class(1, 2, (2, 1)))
    basis = generate_wdvv_relations(reduced.support(), reduced.ambient, rounds=1)
    assert basis.relations
    for rel in basis.relations[:20]:
        assert all(v == 0 for _b, v in pair_with_psi_monomials(rel))


def test_eliminate_preserves_nonzero_pairings():
    e = parse_bracket("<P^1(x1) P^1(x2) x3 x4 x5>_0")
    assert pair_with_psi_monomials(e) == pair_with_psi_monomials(eliminate_all_psi(e))
    g1 = parse_bracket("<P^2(x1) P^1(x2) x3 x4>_1")
    assert pair_with_psi_monomials(g1) == pair_with_psi_monomials(eliminate_all_psi(g1))


def test_genus1_integral_literals():
    table = {
        (1,): Fraction(1, 24),
        (2, 0): Fraction(1, 24),
        (1, 1): Fraction(1, 24),
        (3, 0, 0): Fraction(1, 24),
        (2, 1, 0): Fraction(1, 12),
        (1, 1, 1): Fraction(1, 12),
        (2, 2, 0, 0): Fraction(1, 6),
    }
    for exps, value in table.items():
        assert genus1_vertex_integral(exps) == value


# ---------------------------------------------------------------------------
# span certification


def test_span_certifies_residue_fixture():
    cert = span_zero_test(parse_bracket(fixture_text("f")), budget=3)
    assert cert.zero and cert.reason == "wdvv-span"


def test_span_certificate_resubstitution():
    cert = span_zero_test(parse_bracket(fixture_text("f")), budget=3)
    total = None
    for coeff, rel in cert.relations_used():
        piece = rel.scale(coeff)
        total = piece if total is None else total + piece
    assert total == parse_bracket(fixture_text("f"))


def test_span_single_divisor_unknown():
    e = parse_bracket("<x1 x2 a>_0 <a* x3 x4 x5>_0")
    cert = span_zero_test(e, budget=2)
    assert not cert.zero
    assert cert.reason == "unknown"


def test_span_rejects_psi_terms():
    with pytest.raises(ValueError):
        span_zero_test(parse_bracket("<P^1(x1) x2 x3 x4>_0"))


def test_reduction_path_independence_modulo_relations():
    e = parse_bracket("<P^1(x1) x2 x3 x4 x5>_0")
    (_c, dg), = e.terms()
    h = {lab: dg.graph.leg_with_label(lab) for lab in ("x1", "x2", "x3", "x4", "x5")}
    seen = []
    for pair in [(h["x2"], h["x3"]), (h["x3"], h["x4"]), (h["x4"], h["x5"])]:
        seen.append(psi_reduce_genus0(e, 0, h["x1"], pair))
    for a, b in itertools.combinations(seen, 2):
        assert certified_zero(a - b, budget=2)


# ---------------------------------------------------------------------------
# integration


def test_integrate_point_moduli():
    assert integrate(parse_bracket("<x1 x2 x3>_0")) == 1


def test_integrate_psi_on_one_pointed_genus1():
    assert integrate(parse_bracket("<P^1(x1)>_1")) == Fraction(1, 24)


def test_integrate_genus0_closed_form_example():
    assert integrate(parse_bracket("<P^2(x1) x2 x3 x4 x5>_0")) == 1


def test_integrate_requires_top_degree():
    with pytest.raises(ValueError):
        integrate(parse_bracket("<x1 x2 x3 x4>_0"))


def test_genus0_closed_form_matches_string_recursion():
    for n in range(3, 9):
        for exps in itertools.combinations_with_replacement(range(6), n):
            if sum(exps) != n - 3:
                continue
            assert genus0_vertex_integral(exps) == genus0_integral_by_string(exps)


def test_genus1_recursion_matches_string_dilaton():
    for n in range(1, 6):
        for exps in itertools.combinations_with_replacement(range(n + 1), n):
            if sum(exps) != n:
                continue
            assert genus1_vertex_integral(exps) == \
                genus1_integral_by_string_dilaton(exps)


def test_single_reduction_steps_preserve_pairings():
    cases = [
        ("<P^1(x1) x2 x3 x4>_0", "genus0"),
        ("<P^2(x1) x2 x3 x4 x5>_0", "genus0"),
        ("<P^1(x1) x2>_1", "genus1"),
        ("<P^2(x1) x2 x3>_1", "genus1"),
        ("<x1 x2 a>_0 <a* P^1(x3) x4 x5>_0", "genus0"),
    ]
    for text, kind in cases:
        e = parse_bracket(text)
        (_c, dg), = e.terms()
        target = next(h for h in range(dg.graph.n_half_edges)
                      if dg.exponents[h] > 0)
        v = dg.graph.vertex_of[target]
        if kind == "genus0":
            pair = choose_partner_pair(dg, v, target)
            out = psi_reduce_genus0(e, v, target, pair)
        else:
            out = psi_reduce_genus1(e, v, target)
        assert pair_with_psi_monomials(e) == pair_with_psi_monomials(out)


def test_zero_expression_pairs_to_zero():
    e = parse_bracket("<x1 x2 x3 x4>_0")
    assert all(v == 0 for _b, v in pair_with_psi_monomials(e - e))
