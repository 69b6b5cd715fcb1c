"""Finite quotients of finitely generated groups, box spaces and their
dimension at a given scale."""

from ._accel import backend
from .boxspace import BoxFamily, BoxMetric, assemble_box, box_dim_report, box_family, export_scale_graph
from .covers import Cover, check_cover, greedy_clique_cover, greedy_slab_cover, lift_cover, pullback_cover, read_cover, write_cover
from .dimsolve import DimProfile, ScaleDimWitness, dim_profile, exact_min_colors, exact_min_multiplicity, multiplicity_lower_bound
from .errors import (
    BoxdimError,
    DomainError,
    IntegrityError,
    ParameterError,
    PreconditionError,
    ResourceError,
    UnsupportedSpaceError,
)
from .extension import (
    ExtensionData,
    KeyLemmaReport,
    extension_for,
    fiber_product_cover,
    pushforward_family,
    rho_map,
    verify_key_lemma,
)
from .finite import FiniteGroup
from .groups import (
    FiniteCyclicProduct,
    FreeAbelian,
    Heisenberg3,
    InfiniteDihedral,
    MarkedGroup,
    SemidirectZnZ,
    WreathLamp,
    make_family,
    parse_group_spec,
    parse_word,
    word_ball,
    word_distance,
)
from .hirsch import canonical_tree, format_tree, hirsch_length, hirsch_of_builtin, parse_tree
from .quotients import FiniteQuotient, SubgroupSpec, build_quotient, congruence_spec, preimage_spec, read_edge_list
from .separation import (
    collision_length,
    injectivity_radius,
    is_semi_conjugacy_separating,
    is_separating,
    verify_isometry_lemma,
)
from .spaces import FiniteMetricSpace

__version__ = "0.1.0"
