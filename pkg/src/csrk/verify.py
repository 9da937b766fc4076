"""Exact certification of order and geometric properties in coefficient space.

Every certificate here is algebraic: residuals are exact Scalars computed
from the coefficient tensor, and a property "holds" only when its residual
is exactly zero.  Order conditions are checked directly up to order 4; the
moment identities B/C/D deliver a guaranteed lower bound on the order
beyond that.  The step-size contraction bound is the only numerical
(advisory) quantity in the module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact import Scalar
from .legendre import (
    UnivariatePoly,
    legendre_monomial,
    legendre_table,
    mono_int01,
    mono_mul,
    mono_pow,
)
from .method import CsrkMethod, EpSpec

__all__ = [
    "OrderConditionResult",
    "SimplifyingLevels",
    "PropertyReport",
    "check_order_conditions",
    "order_condition_residuals",
    "check_simplifying",
    "c_breve_defect",
    "d_breve_defect",
    "guaranteed_order",
    "symplectic_residual",
    "symplectic_defect",
    "symmetric_residual",
    "symmetric_defect",
    "energy_preserving_residual",
    "energy_preserving_defect",
    "check_epm2_condition",
    "stage_contraction_bound",
    "build_property_report",
    "report_to_json_dict",
]

_ZERO = Scalar(0)


def _max_abs(values) -> Scalar:
    """Exact max-norm: zero iff every entry is exactly zero."""
    best = _ZERO
    best_f = 0.0
    for v in values:
        if not v:
            continue
        a = abs(v)
        f = float(a)
        if f > best_f or not best:
            best, best_f = a, f
    return best


def _project(mono: tuple[Scalar, ...], n: int) -> list[Scalar]:
    """Exact projections <p, P_i> for i = 0..n of a monomial-basis poly."""
    return [mono_int01(mono_mul(mono, legendre_monomial(i))) for i in range(n + 1)]


def _legendre_to_mono(coeffs) -> tuple[Scalar, ...]:
    total: list[Scalar] = []
    for i, c in enumerate(coeffs):
        if not c:
            continue
        for k, m in enumerate(legendre_monomial(i)):
            while len(total) <= k:
                total.append(_ZERO)
            total[k] = total[k] + c * m
    while total and not total[-1]:
        total.pop()
    return tuple(total)


# -- order conditions --------------------------------------------------------


@dataclass(frozen=True)
class OrderConditionResult:
    order: int
    residuals: dict[int, Scalar]

    def holds(self, condition: int) -> bool:
        return not self.residuals[condition]


def _fast_residuals(m: CsrkMethod) -> dict[int, Scalar]:
    a = m.entry
    r = {1: _ZERO, 2: _ZERO, 3: _ZERO, 5: _ZERO}
    r[4] = a(0, 0) / 2 + Scalar.sqrt(3, Fraction(1, 6)) * a(0, 1) - Fraction(1, 6)
    r[6] = (
        a(0, 0) / 4
        + Scalar.sqrt(3, Fraction(1, 12)) * (a(1, 0) + a(0, 1))
        + a(1, 1) / 12
        - Fraction(1, 8)
    )
    r[7] = (
        a(0, 0) / 3
        + Scalar.sqrt(3, Fraction(1, 6)) * a(0, 1)
        + Scalar.sqrt(5, Fraction(1, 30)) * a(0, 2)
        - Fraction(1, 12)
    )
    s8 = _ZERO
    for i in range(m.pi_sigma + 1):
        s8 = s8 + a(0, i) * (a(i, 0) / 2 + Scalar.sqrt(3, Fraction(1, 6)) * a(i, 1))
    r[8] = s8 - Fraction(1, 24)
    return r


def _general_residuals(m: CsrkMethod) -> dict[int, Scalar]:
    bm = _legendre_to_mono(m.B.coeffs)
    cm = _legendre_to_mono(m.C.coeffs)
    r = {
        1: mono_int01(bm) - 1,
        2: mono_int01(mono_mul(bm, cm)) - Fraction(1, 2),
        3: mono_int01(mono_mul(bm, mono_pow(cm, 2))) - Fraction(1, 3),
        5: mono_int01(mono_mul(bm, mono_pow(cm, 3))) - Fraction(1, 4),
    }
    beta = _project(bm, m.pi_tau)
    beta_c = _project(mono_mul(bm, cm), m.pi_tau)
    gamma = _project(cm, m.pi_sigma)
    gamma2 = _project(mono_pow(cm, 2), m.pi_sigma)

    def bilinear(left, right):
        total = _ZERO
        for i, row in enumerate(m.alpha):
            for j, v in enumerate(row):
                if v:
                    total = total + v * left[i] * right[j]
        return total

    r[4] = bilinear(beta, gamma) - Fraction(1, 6)
    r[6] = bilinear(beta_c, gamma) - Fraction(1, 8)
    r[7] = bilinear(beta, gamma2) - Fraction(1, 12)
    # condition (8): project both A-contractions onto the shared sigma basis
    n = max(m.pi_tau, m.pi_sigma)
    left = [_ZERO] * (n + 1)  # coefficients of int B(t) A(t, s) dt
    for j in range(m.pi_sigma + 1):
        for i in range(m.pi_tau + 1):
            left[j] = left[j] + m.entry(i, j) * beta[i]
    right = [_ZERO] * (n + 1)  # coefficients of int A(s, r) C(r) dr
    for i in range(m.pi_tau + 1):
        for j in range(m.pi_sigma + 1):
            right[i] = right[i] + m.entry(i, j) * gamma[j]
    total = _ZERO
    for k in range(n + 1):
        total = total + left[k] * right[k]
    r[8] = total - Fraction(1, 24)
    return r


def order_condition_residuals(m: CsrkMethod, path: str = "auto") -> dict[int, Scalar]:
    """Residuals of the eight order conditions, exactly.

    path "fast" uses the reduced coefficient relations (valid only for
    B = 1, C = tau); "general" evaluates the defining integrals by exact
    polynomial algebra; "auto" picks the fast path when admissible.
    """
    fast_ok = m.is_b_one() and m.is_c_tau()
    if path == "fast" or (path == "auto" and fast_ok):
        if not fast_ok:
            raise ValueError("fast path requires B = 1 and C = tau")
        return _fast_residuals(m)
    if path not in ("auto", "general"):
        raise ValueError(f"unknown path {path!r}")
    return _general_residuals(m)


_CONDITIONS_BY_ORDER = {1: (1,), 2: (1, 2), 3: (1, 2, 3, 4), 4: tuple(range(1, 9))}


def check_order_conditions(m: CsrkMethod, path: str = "auto") -> OrderConditionResult:
    """Largest directly verified order in 0..4 plus per-condition residuals."""
    residuals = order_condition_residuals(m, path)
    order = 0
    for p in (1, 2, 3, 4):
        if all(not residuals[c] for c in _CONDITIONS_BY_ORDER[p]):
            order = p
        else:
            break
    return OrderConditionResult(order, residuals)


# -- simplifying assumptions ---------------------------------------------------


@dataclass(frozen=True)
class SimplifyingLevels:
    rho: float  # math.inf when B = 1, C = tau holds (then every level passes)
    eta: int
    zeta: int


def _mono_sub(a: tuple[Scalar, ...], b: tuple[Scalar, ...]) -> tuple[Scalar, ...]:
    n = max(len(a), len(b))
    out = [a[i] if i < len(a) else _ZERO for i in range(n)]
    for i, c in enumerate(b):
        out[i] = out[i] - c
    while out and not out[-1]:
        out.pop()
    return tuple(out)


def c_breve_defect(m: CsrkMethod, k: int) -> tuple[Scalar, ...]:
    """Monomial coefficients (in tau) of int A C^(k-1) dsigma - C^k / k."""
    cm = _legendre_to_mono(m.C.coeffs)
    proj = _project(mono_pow(cm, k - 1), m.pi_sigma)
    lhs_coeffs = []
    for i in range(m.pi_tau + 1):
        acc = _ZERO
        for j in range(m.pi_sigma + 1):
            acc = acc + m.entry(i, j) * proj[j]
        lhs_coeffs.append(acc)
    rhs = tuple(c / k for c in mono_pow(cm, k))
    return _mono_sub(_legendre_to_mono(lhs_coeffs), rhs)


def d_breve_defect(m: CsrkMethod, k: int) -> tuple[Scalar, ...]:
    """Monomial coefficients (in sigma) of int B C^(k-1) A dtau - B (1 - C^k) / k."""
    bm = _legendre_to_mono(m.B.coeffs)
    cm = _legendre_to_mono(m.C.coeffs)
    proj = _project(mono_mul(bm, mono_pow(cm, k - 1)), m.pi_tau)
    lhs_coeffs = []
    for j in range(m.pi_sigma + 1):
        acc = _ZERO
        for i in range(m.pi_tau + 1):
            acc = acc + m.entry(i, j) * proj[i]
        lhs_coeffs.append(acc)
    ck = mono_pow(cm, k)
    one_minus = [Scalar(1)] + [_ZERO] * (max(len(ck), 1) - 1)
    for idx, c in enumerate(ck):
        one_minus[idx] = one_minus[idx] - c
    rhs = tuple(c / k for c in mono_mul(bm, tuple(one_minus)))
    return _mono_sub(_legendre_to_mono(lhs_coeffs), rhs)


def check_simplifying(m: CsrkMethod, cap: int = 10) -> SimplifyingLevels:
    """Largest levels of the moment identities, checked exactly.

    rho is probed to 2*cap and reported as infinity for B = 1, C = tau
    (where the weight moments hold at every level).
    """
    bm = _legendre_to_mono(m.B.coeffs)
    cm = _legendre_to_mono(m.C.coeffs)

    rho = 0
    for k in range(1, 2 * cap + 1):
        if mono_int01(mono_mul(bm, mono_pow(cm, k - 1))) != Fraction(1, k):
            break
        rho += 1
    rho_out: float = math.inf if (m.is_b_one() and m.is_c_tau() and rho == 2 * cap) else rho

    eta = 0
    for k in range(1, cap + 1):
        if c_breve_defect(m, k):
            break
        eta += 1

    zeta = 0
    for k in range(1, cap + 1):
        if d_breve_defect(m, k):
            break
        zeta += 1

    return SimplifyingLevels(rho_out, eta, zeta)


def guaranteed_order(m: CsrkMethod, cap: int = 10) -> int:
    """Order lower bound min(rho, 2*eta + 2, eta + zeta + 1)."""
    lv = check_simplifying(m, cap)
    return int(min(lv.rho, 2 * lv.eta + 2, lv.eta + lv.zeta + 1))


# -- geometric property residuals ---------------------------------------------


def _pad(matrix: list[list[Scalar]], n: int) -> list[list[Scalar]]:
    out = [[_ZERO] * n for _ in range(n)]
    for i, row in enumerate(matrix):
        for j, v in enumerate(row):
            out[i][j] = v
    return out


def _b_times_tensor(m: CsrkMethod) -> list[list[Scalar]]:
    """Tensor coefficients of B(tau) * A(tau, sigma)."""
    ncols = m.pi_sigma + 1
    cols = []
    for j in range(ncols):
        col_poly = UnivariatePoly([m.entry(i, j) for i in range(m.pi_tau + 1)])
        prod = mono_mul(_legendre_to_mono(m.B.coeffs), _legendre_to_mono(col_poly.coeffs))
        cols.append(UnivariatePoly.from_monomial(prod).coeffs)
    nrows = max((len(c) for c in cols), default=1)
    return [[cols[j][i] if i < len(cols[j]) else _ZERO for j in range(ncols)] for i in range(nrows)]


def symplectic_defect(m: CsrkMethod) -> list[list[Scalar]]:
    """Tensor coefficients of B(t)A(t,s) + B(s)A(s,t) - B(t)B(s)."""
    t1 = _b_times_tensor(m)
    n = max(len(t1), len(t1[0]) if t1 else 0, len(m.B.coeffs))
    t1 = _pad(t1, n)
    b = [m.B.coeff(i) for i in range(n)]
    out = [[_ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            out[i][j] = t1[i][j] + t1[j][i] - b[i] * b[j]
    return out


def symplectic_residual(m: CsrkMethod) -> Scalar:
    """Max-norm of the symplectic defect tensor; zero certifies symplecticity."""
    return _max_abs(v for row in symplectic_defect(m) for v in row)


def symmetric_defect(m: CsrkMethod) -> list[list[Scalar]]:
    """Tensor coefficients of A(t,s) + A(1-t,1-s) - B(s).

    Uses the reflection P_i(1-x) = (-1)**i P_i(x).  Requires the first
    weight moment to be 1 (a method of order at least 1).
    """
    if m.B.coeff(0) != 1:
        raise ValueError(
            "symmetry residual requires the weight integral to equal 1 "
            f"(got {m.B.coeff(0)})"
        )
    n = max(m.pi_tau + 1, m.pi_sigma + 1, len(m.B.coeffs))
    out = [[_ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sign = 1 if (i + j) % 2 == 0 else -1
            out[i][j] = m.entry(i, j) + sign * m.entry(i, j)
    for j in range(n):
        out[0][j] = out[0][j] - m.B.coeff(j)
    return out


def symmetric_residual(m: CsrkMethod) -> Scalar:
    """Max-norm of the time-reversal defect tensor; zero certifies symmetry."""
    return _max_abs(v for row in symmetric_defect(m) for v in row)


def _derivative_matrix(n: int) -> list[list[Scalar]]:
    """d[k][i] = coefficient of P_k in P_i'."""
    out = [[_ZERO] * (n + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dcoeffs = UnivariatePoly([0] * i + [1]).derivative().coeffs
        for k, v in enumerate(dcoeffs):
            out[k][i] = v
    return out


def energy_preserving_defect(
    m: CsrkMethod,
) -> tuple[list[list[Scalar]], list[Scalar], list[Scalar]]:
    """The three defect arrays of the energy-preservation certificate.

    (1) asymmetry of the tau-derivative of A, (2) coefficients of A(0, .),
    (3) coefficients of A(1, .) - B.
    """
    n = max(m.pi_tau, m.pi_sigma, m.B.degree)
    d = _derivative_matrix(n)
    a = _pad([list(r) for r in m.alpha], n + 1)
    da = [[_ZERO] * (n + 1) for _ in range(n + 1)]
    for k in range(n + 1):
        for j in range(n + 1):
            acc = _ZERO
            for i in range(n + 1):
                if d[k][i] and a[i][j]:
                    acc = acc + d[k][i] * a[i][j]
            da[k][j] = acc
    asym = [
        [da[i][j] - da[j][i] for j in range(n + 1)] for i in range(n + 1)
    ]
    at0 = []
    at1 = []
    for j in range(n + 1):
        v0 = _ZERO
        v1 = _ZERO
        for i in range(m.pi_tau + 1):
            norm = Scalar.sqrt(2 * i + 1)
            v1 = v1 + norm * m.entry(i, j)
            v0 = v0 + ((-1) ** i) * norm * m.entry(i, j)
        at0.append(v0)
        at1.append(v1 - m.B.coeff(j))
    return asym, at0, at1


def energy_preserving_residual(m: CsrkMethod) -> tuple[Scalar, Scalar, Scalar]:
    """Max-norms of the three energy-preservation defects; all zero certifies."""
    asym, at0, at1 = energy_preserving_defect(m)
    return (
        _max_abs(v for row in asym for v in row),
        _max_abs(at0),
        _max_abs(at1),
    )


def check_epm2_condition(
    spec: EpSpec, eta: int
) -> tuple[bool, tuple[int, int] | None]:
    """Moment-identity level test for generator-based energy-preserving specs.

    True iff sum_k w_k a_ki a_kj equals delta_ij for i, j < eta and equals 0
    for i < eta, j from eta up to the generators' degree.  On failure the
    first violating index pair is returned.
    """
    if spec.generators is None:
        raise ValueError("generator coefficients are required")
    max_deg = max((g.degree for g in spec.generators), default=0)

    def gram(i: int, j: int) -> Scalar:
        total = _ZERO
        for w, g in zip(spec.omegas, spec.generators):
            total = total + w * g.coeff(i) * g.coeff(j)
        return total

    for i in range(eta):
        for j in range(max_deg + 1):
            target = Scalar(1 if i == j else 0) if j < eta else _ZERO
            if gram(i, j) != target:
                return False, (i, j)
    return True, None


# -- step-size contraction bound (advisory, numerical) -------------------------


def _abs_sigma_integral(mono: np.ndarray) -> float:
    """Integral over [0, 1] of |p| for a monomial-coefficient polynomial."""
    mono = np.asarray(mono, float)
    scale = np.max(np.abs(mono)) if mono.size else 0.0
    if scale == 0.0:
        return 0.0
    trimmed = np.trim_zeros(np.where(np.abs(mono) > 1e-14 * scale, mono, 0.0), "b")
    if trimmed.size <= 1:
        return abs(float(trimmed[0])) if trimmed.size else 0.0
    roots = np.roots(trimmed[::-1])
    breaks = sorted(
        float(r.real)
        for r in roots
        if abs(r.imag) < 1e-9 and 1e-12 < r.real < 1 - 1e-12
    )
    anti = np.concatenate([[0.0], trimmed / np.arange(1, trimmed.size + 1)])
    points = [0.0] + breaks + [1.0]
    total = 0.0
    for a, b in zip(points[:-1], points[1:]):
        total += abs(np.polyval(anti[::-1], b) - np.polyval(anti[::-1], a))
    return total


def stage_contraction_bound(m: CsrkMethod, lipschitz: float) -> float:
    """Step-size ceiling 1 / (L * max_tau int |A(tau, .)|) for unique stages.

    The inner integral of |A| is computed by exact piecewise integration
    between the real roots of the sigma-polynomial; the outer maximum by
    dense sampling plus local refinement to 1e-6 in tau.  Advisory, not a
    certificate.
    """
    if lipschitz <= 0:
        raise ValueError("the Lipschitz constant must be positive")
    nsig = m.pi_sigma
    leg2mono = np.zeros((nsig + 1, nsig + 1))
    for i in range(nsig + 1):
        for k, c in enumerate(legendre_monomial(i)):
            leg2mono[i, k] = float(c)
    alpha_f = m.alpha_floats()

    def g(tau: float) -> float:
        pt = legendre_table(m.pi_tau, np.array([tau]))[:, 0]
        sigma_leg = pt @ alpha_f
        return _abs_sigma_integral(sigma_leg @ leg2mono)

    taus = np.linspace(0.0, 1.0, 65)
    vals = [g(t) for t in taus]
    k = int(np.argmax(vals))
    lo = taus[max(k - 1, 0)]
    hi = taus[min(k + 1, len(taus) - 1)]
    best = vals[k]
    while hi - lo > 1e-6:
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        g1, g2 = g(m1), g(m2)
        best = max(best, g1, g2)
        if g1 < g2:
            lo = m1
        else:
            hi = m2
    if best == 0.0:
        return math.inf
    return 1.0 / (lipschitz * best)


# -- aggregate report ----------------------------------------------------------


@dataclass(frozen=True)
class PropertyReport:
    verified_order_direct: int
    breve_b: float
    breve_c: int
    breve_d: int
    guaranteed_order: int
    symplectic_residual: Scalar
    symmetric_residual: Scalar | None
    ep_residuals: tuple[Scalar, Scalar, Scalar]
    h_bound_per_unit_L: float

    @property
    def flags(self) -> dict[str, bool]:
        return {
            "symplectic": not self.symplectic_residual,
            "symmetric": self.symmetric_residual is not None
            and not self.symmetric_residual,
            "energy_preserving": not any(self.ep_residuals),
        }


def build_property_report(m: CsrkMethod, cap: int = 10) -> PropertyReport:
    """Run every certifier and collect the results."""
    levels = check_simplifying(m, cap)
    g_order = int(min(levels.rho, 2 * levels.eta + 2, levels.eta + levels.zeta + 1))
    try:
        sym = symmetric_residual(m)
    except ValueError:
        sym = None
    return PropertyReport(
        verified_order_direct=check_order_conditions(m).order,
        breve_b=levels.rho,
        breve_c=levels.eta,
        breve_d=levels.zeta,
        guaranteed_order=g_order,
        symplectic_residual=symplectic_residual(m),
        symmetric_residual=sym,
        ep_residuals=energy_preserving_residual(m),
        h_bound_per_unit_L=stage_contraction_bound(m, 1.0),
    )


def report_to_json_dict(r: PropertyReport) -> dict:
    return {
        "verified_order_direct": r.verified_order_direct,
        "breve": {
            "B": "inf" if math.isinf(r.breve_b) else int(r.breve_b),
            "C": r.breve_c,
            "D": r.breve_d,
        },
        "guaranteed_order": r.guaranteed_order,
        "residuals": {
            "symplectic": str(r.symplectic_residual),
            "symmetric": None if r.symmetric_residual is None else str(r.symmetric_residual),
            "energy": [str(v) for v in r.ep_residuals],
        },
        "flags": r.flags,
        "h_bound_per_unit_L": r.h_bound_per_unit_L,
    }
