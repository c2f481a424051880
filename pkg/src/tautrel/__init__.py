"""Exact symbolic calculus for psi-decorated boundary classes on moduli of curves."""

from .graphs import (
    EXTRA,
    DecoratedGraph,
    DualGraph,
    GraphBuilder,
    RootedTreeView,
    automorphism_order,
    canonical_form,
    canonical_key,
    genus,
    graph_from_key,
    is_balanced,
    is_nondegenerate,
    is_stable,
    leg_kind,
    validate,
)
from .expressions import (
    Ambient,
    Expression,
    expression_from_json,
    expression_to_json,
    from_terms,
    graph_from_json,
    graph_to_json,
    make_ambient,
    parse_bracket,
    render_bracket,
    render_latex,
    zero,
)
from .pushforward import d_set, forget_extra_legs, forget_frozen_legs, string_table
from .treeclass import (
    TreeShape,
    WeightVector,
    acceptable_assignments,
    add_extras,
    enumerate_shapes,
    extra_count_bounds,
    shape_class,
    weight_decoration,
    weighted_tree_class,
)
from .reduce import (
    RelationBasis,
    ZeroCertificate,
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

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
