"""Truncated Laplacians on the punctured ball: eigenvalues, singular solutions, checks."""

__version__ = "0.1.0"

from .operator import (  # noqa: E402
    ProblemParams,
    RadialJet,
    branch_indicator,
    eval_pk,
    eval_pk_minus,
    eval_pk_plus,
    residual_eigen,
    residual_superlinear,
)
from .mesh import GradedMesh, RadialProfile, build_mesh, weighted_element_integrals  # noqa: E402
from .closed_forms import (  # noqa: E402
    ClosedFormSolution,
    eval_closed_form,
    pkm_closed_form,
    pkm_limit_constant,
    pkm_decreasing_radius,
    pkm_solution_from_data,
)
from .eigen import (  # noqa: E402
    EigenResult,
    PicardResult,
    check_max_principle_pkm,
    closed_form_eigen_gamma2,
    picard_solve,
    pkm_supersolution,
    solve_eigen_fem,
    solve_eigen_shooting,
)
from .superlinear import (  # noqa: E402
    AsymptoticClass,
    ExponentData,
    classify_asymptotics,
    compute_exponents,
    data_recipe,
    integrate_pkp_superlinear,
    pkp_scaling_solution,
)
from .verify import (  # noqa: E402
    CheckReport,
    check_comparison,
    check_convexity_structure,
    check_profile_consistency,
    check_sign_lemma,
)
