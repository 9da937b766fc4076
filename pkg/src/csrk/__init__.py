"""Continuous-stage Runge-Kutta toolkit.

Construct continuous-stage methods as exact Legendre coefficient tensors,
certify their order and geometric properties algebraically, reduce them to
classical Butcher tableaus by quadrature, and validate the certificates on
Hamiltonian test problems.
"""

from .exact import Scalar, as_scalar
from .legendre import (
    CAP,
    ONE,
    TAU,
    BasisCapExceeded,
    UnivariatePoly,
    antiderivative,
    eval_legendre,
    inner_product,
    monomial_to_legendre,
    xi,
)
from .method import (
    ConsistencyViolation,
    CsrkMethod,
    EpSpec,
    Order4ConstraintViolation,
    ParityViolation,
    SkewConflict,
    construct_ep_general,
    construct_ep_legendre,
    construct_order_by_order,
    construct_simplifying,
    construct_symmetric,
    construct_symplectic,
    method_from_json_dict,
    method_to_json_dict,
    new_method,
)
from .verify import (
    PropertyReport,
    build_property_report,
    check_epm2_condition,
    check_order_conditions,
    check_simplifying,
    energy_preserving_residual,
    guaranteed_order,
    stage_contraction_bound,
    symmetric_residual,
    symplectic_residual,
)
from .discretize import (
    ButcherTableau,
    Quadrature,
    discretize,
    explicit_euler,
    gauss_legendre,
    lobatto,
    predicted_rk_order,
    quadrature_order,
    rk_symplectic_residual,
)
from .integrate import (
    NonConvergence,
    NonFinite,
    OdeProblem,
    StepperConfig,
    Trajectory,
    builtin_problem,
    empirical_order,
    energy_drift,
    integrate,
    rk_step,
    symmetry_residual,
    symplecticity_residual,
)

__version__ = "0.1.0"
