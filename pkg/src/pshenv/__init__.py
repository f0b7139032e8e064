"""pshenv: plurisubharmonic envelopes by disc optimization, with oracles.

Computes upper envelopes of scalar fields over polynomial analytic discs on
euclidean windows and model complex curves, certifies hull membership through
disc boundaries, and ships independent brute-force oracles for cross-checks.
"""

__version__ = "0.1.0"

from .disc import (
    AnalyticDisc,
    BoundaryFamily,
    LaurentFamily,
    choose_phase,
    compose_rh,
    constant_disc,
    disc_from_json,
    disc_to_json,
    fit_laurent,
    interior_fit_radius,
)
from .envelope import (
    EnvelopeEstimate,
    SearchBudget,
    check_submean,
    child_budget,
    envelope_at,
    envelope_grid,
    upper_regularize,
)
from .errors import (
    ConfigError,
    DegreeOverflow,
    DomainError,
    EmptyShell,
    IllConditioned,
    InterpolationOutOfRange,
    NotApplicable,
    NotConverged,
    PointNotOnSpace,
    PointOutsideWindow,
    PshenvError,
    SchemaMismatch,
)
from .functional import (
    QuadratureSpec,
    ScalarField,
    arc_functional,
    decreasing_approximation,
    eval_field,
    parse_field,
    poisson_functional,
    pushforward_field,
)
from .hull import (
    CompactSet,
    HullCertificate,
    NotFound,
    bundled_psh_corpus,
    certificate_from_json,
    certificate_to_json,
    hull_membership,
    load_certificate,
    membership_field,
    save_certificate,
    verify_certificate,
)
from .oracle import (
    GridDomain,
    RadialEnvelope,
    field_on_grid,
    grid_domain,
    interp_bilinear,
    radial_envelope,
    subharmonic_minorant,
)
from .space import (
    BranchMap,
    DomainConstraint,
    SpaceModel,
    contains,
    curve_space,
    euclidean_space,
    lift_point,
    singular_locus_hint,
)

__all__ = [
    "AnalyticDisc",
    "BoundaryFamily",
    "BranchMap",
    "CompactSet",
    "ConfigError",
    "DegreeOverflow",
    "DomainConstraint",
    "DomainError",
    "EmptyShell",
    "EnvelopeEstimate",
    "GridDomain",
    "HullCertificate",
    "IllConditioned",
    "InterpolationOutOfRange",
    "LaurentFamily",
    "NotApplicable",
    "NotConverged",
    "NotFound",
    "PointNotOnSpace",
    "PointOutsideWindow",
    "PshenvError",
    "QuadratureSpec",
    "RadialEnvelope",
    "ScalarField",
    "SchemaMismatch",
    "SearchBudget",
    "SpaceModel",
    "arc_functional",
    "bundled_psh_corpus",
    "certificate_from_json",
    "certificate_to_json",
    "check_submean",
    "child_budget",
    "choose_phase",
    "compose_rh",
    "constant_disc",
    "contains",
    "curve_space",
    "decreasing_approximation",
    "disc_from_json",
    "disc_to_json",
    "envelope_at",
    "envelope_grid",
    "euclidean_space",
    "eval_field",
    "field_on_grid",
    "fit_laurent",
    "grid_domain",
    "hull_membership",
    "interior_fit_radius",
    "interp_bilinear",
    "lift_point",
    "load_certificate",
    "membership_field",
    "parse_field",
    "poisson_functional",
    "pushforward_field",
    "radial_envelope",
    "save_certificate",
    "singular_locus_hint",
    "subharmonic_minorant",
    "upper_regularize",
    "verify_certificate",
]
