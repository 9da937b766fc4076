"""Implicit Runge-Kutta stepping and empirical geometric diagnostics.

The stage equations U_i = z_n + h * sum_j a_ij f(t_n + c_j h, U_j) are
solved by fixed-point iteration (the default, valid inside the contraction
regime) or by Newton iteration with a finite-difference Jacobian (the
fallback for step sizes beyond the advisory bound).  On top of the stepper
sit the order, energy-drift, time-reversal and symplecticity diagnostics
used to validate coefficient-space certificates against actual dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .discretize import ButcherTableau

__all__ = [
    "NonConvergence",
    "NonFinite",
    "StepperConfig",
    "OdeProblem",
    "Trajectory",
    "canonical_structure",
    "rk_step",
    "integrate",
    "OrderEstimate",
    "empirical_order",
    "energy_drift",
    "symmetry_residual",
    "symplecticity_residual",
    "builtin_problem",
    "trajectory_to_csv",
]


class NonConvergence(RuntimeError):
    """Stage iteration failed to reach tolerance within the iteration budget."""

    def __init__(self, message: str, step_index: int | None = None, h_bound: float | None = None):
        super().__init__(message)
        self.step_index = step_index
        self.h_bound = h_bound


class NonFinite(RuntimeError):
    """Stage values overflowed or turned into NaN."""

    def __init__(self, message: str, step_index: int | None = None):
        super().__init__(message)
        self.step_index = step_index


@dataclass(frozen=True)
class StepperConfig:
    tol: float = 1e-14
    max_iter: int = 100
    solver: str = "fixed_point"  # or "newton"

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("stage tolerance must be positive")
        if self.solver not in ("fixed_point", "newton"):
            raise ValueError(f"unknown stage solver {self.solver!r}")


def canonical_structure(dim: int) -> np.ndarray:
    """The canonical antisymmetric structure matrix for states (q, p)."""
    if dim % 2:
        raise ValueError("canonical structure needs an even dimension")
    d = dim // 2
    j = np.zeros((dim, dim))
    j[:d, d:] = np.eye(d)
    j[d:, :d] = -np.eye(d)
    return j


def _fd_gradient(fn: Callable[[np.ndarray], float], z: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(z)
    for k in range(z.size):
        dz = np.zeros_like(z)
        dz[k] = eps
        grad[k] = (fn(z + dz) - fn(z - dz)) / (2 * eps)
    return grad


@dataclass(frozen=True)
class OdeProblem:
    """Initial value problem, optionally Hamiltonian.

    With a Hamiltonian present the state is ordered (q, p) and the right-hand
    side must match the canonical flow J grad(H); this is checked against a
    finite-difference gradient at construction.
    """

    dim: int
    rhs: Callable[[float, np.ndarray], np.ndarray]
    z0: np.ndarray
    t0: float = 0.0
    hamiltonian: Callable[[np.ndarray], float] | None = None
    invariants: Mapping[str, Callable[[np.ndarray], float]] = field(default_factory=dict)
    lipschitz: float | None = None
    reference: Callable[[float], np.ndarray] | None = None
    name: str = ""

    def __post_init__(self):
        z0 = np.asarray(self.z0, float)
        if z0.shape != (self.dim,):
            raise ValueError(f"initial state must have shape ({self.dim},)")
        object.__setattr__(self, "z0", z0)
        if self.hamiltonian is not None:
            if self.dim % 2:
                raise ValueError("Hamiltonian problems need an even dimension")
            j = canonical_structure(self.dim)
            rng = np.random.default_rng(20240901)
            for _ in range(10):
                z = z0 + 0.1 * rng.standard_normal(self.dim)
                expected = j @ _fd_gradient(self.hamiltonian, z)
                got = np.asarray(self.rhs(self.t0, z), float)
                if np.max(np.abs(got - expected)) > 1e-8:
                    raise ValueError(
                        "right-hand side does not match the canonical Hamiltonian flow"
                    )

    @property
    def structure(self) -> np.ndarray:
        return canonical_structure(self.dim)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    iterations: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.states)):
            raise NonFinite("trajectory contains non-finite states")

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _stage_bound_message(t: ButcherTableau, lipschitz: float | None) -> tuple[str, float | None]:
    if lipschitz is None:
        return "", None
    row = float(np.max(np.abs(t.a).sum(axis=1)))
    if row == 0.0:
        return "", None
    bound = 1.0 / (lipschitz * row)
    return f"; contraction bound suggests h < {bound:.6g} for L = {lipschitz:g}", bound


def _solve_stages(
    t: ButcherTableau,
    problem: OdeProblem,
    tn: float,
    zn: np.ndarray,
    h: float,
    cfg: StepperConfig,
) -> tuple[np.ndarray, int]:
    s, d = t.stages, problem.dim
    stage_times = tn + t.c * h
    u = np.tile(zn, (s, 1))

    def rhs_all(stages: np.ndarray) -> np.ndarray:
        return np.array([problem.rhs(stage_times[i], stages[i]) for i in range(s)])

    if cfg.solver == "fixed_point":
        for it in range(1, cfg.max_iter + 1):
            unew = zn + h * (t.a @ rhs_all(u))
            if not np.all(np.isfinite(unew)):
                raise NonFinite("stage iteration produced non-finite values")
            delta = float(np.max(np.abs(unew - u)))
            u = unew
            if delta < cfg.tol:
                return u, it
        advice, bound = _stage_bound_message(t, problem.lipschitz)
        raise NonConvergence(
            f"fixed-point stage iteration did not reach {cfg.tol:g} "
            f"in {cfg.max_iter} iterations at t = {tn:g}{advice}",
            h_bound=bound,
        )

    # Newton with a fresh finite-difference Jacobian per iteration
    eye = np.eye(s * d)
    for it in range(1, cfg.max_iter + 1):
        f_now = rhs_all(u)
        residual = (u - zn - h * (t.a @ f_now)).ravel()
        if not np.all(np.isfinite(residual)):
            raise NonFinite("stage iteration produced non-finite values")
        jac_blocks = []
        for i in range(s):
            jf = np.zeros((d, d))
            for k in range(d):
                dz = np.zeros(d)
                dz[k] = 1e-7
                jf[:, k] = (
                    problem.rhs(stage_times[i], u[i] + dz)
                    - problem.rhs(stage_times[i], u[i] - dz)
                ) / 2e-7
            jac_blocks.append(jf)
        big = eye.copy()
        for i in range(s):
            for j in range(s):
                big[i * d : (i + 1) * d, j * d : (j + 1) * d] -= h * t.a[i, j] * jac_blocks[j]
        try:
            update = np.linalg.solve(big, residual)
        except np.linalg.LinAlgError as exc:
            raise NonConvergence(f"singular Newton system at t = {tn:g}: {exc}") from exc
        u = u - update.reshape(s, d)
        if float(np.max(np.abs(update))) < cfg.tol:
            return u, it
    raise NonConvergence(
        f"Newton stage iteration did not reach {cfg.tol:g} in {cfg.max_iter} iterations"
    )


def rk_step(
    t: ButcherTableau,
    problem: OdeProblem,
    tn: float,
    zn: np.ndarray,
    h: float,
    cfg: StepperConfig = StepperConfig(),
) -> np.ndarray:
    """One implicit RK step from (tn, zn) with step h (h may be negative)."""
    zn = np.asarray(zn, float)
    u, _ = _solve_stages(t, problem, tn, zn, h, cfg)
    stage_times = tn + t.c * h
    f_final = np.array([problem.rhs(stage_times[i], u[i]) for i in range(t.stages)])
    z1 = zn + h * (t.b @ f_final)
    if not np.all(np.isfinite(z1)):
        raise NonFinite("step produced non-finite state")
    return z1


def integrate(
    t: ButcherTableau,
    problem: OdeProblem,
    h: float,
    n_steps: int,
    cfg: StepperConfig = StepperConfig(),
) -> Trajectory:
    """n_steps equal steps from the problem's initial condition."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    times = problem.t0 + h * np.arange(n_steps + 1)
    states = np.empty((n_steps + 1, problem.dim))
    iters = np.zeros(n_steps + 1, dtype=int)
    states[0] = problem.z0
    z = problem.z0.copy()
    for n in range(n_steps):
        try:
            u, it = _solve_stages(t, problem, times[n], z, h, cfg)
        except (NonConvergence, NonFinite) as exc:
            exc.step_index = n
            raise
        stage_times = times[n] + t.c * h
        f_final = np.array([problem.rhs(stage_times[i], u[i]) for i in range(t.stages)])
        z = z + h * (t.b @ f_final)
        if not np.all(np.isfinite(z)):
            raise NonFinite(f"non-finite state after step {n}", step_index=n)
        states[n + 1] = z
        iters[n + 1] = it
    return Trajectory(times, states, iters)


@dataclass(frozen=True)
class OrderEstimate:
    slope: float | None
    pairwise: tuple[float, ...]
    errors: tuple[float, ...]
    h_values: tuple[float, ...]
    saturated: bool


def empirical_order(
    t: ButcherTableau,
    problem: OdeProblem,
    h_list,
    t_final: float,
    cfg: StepperConfig = StepperConfig(),
    reference: Callable[[float], np.ndarray] | None = None,
) -> OrderEstimate:
    """Least-squares slope of log global error against log step size.

    The reference solution is, in order of preference: the supplied
    callable, the problem's analytic reference, or a run at h_min / 8 with
    the same tableau.
    """
    h_list = [float(h) for h in h_list]
    if len(h_list) < 3:
        raise ValueError("at least three step sizes are required")
    ref = reference or problem.reference
    if ref is None:
        h_fine = min(h_list) / 8
        n_fine = round(t_final / h_fine)
        fine = integrate(t, problem, t_final / n_fine, n_fine, cfg)
        ref_final = fine.final_state

        def ref(time: float, _z=ref_final, _tf=t_final):
            if abs(time - _tf) > 1e-9:
                raise ValueError("fine-run reference is only available at t_final")
            return _z

    errors = []
    for h in h_list:
        n = round(t_final / h)
        if n < 1 or abs(n * h - t_final) > 1e-9:
            raise ValueError(f"step {h} does not divide the final time {t_final}")
        traj = integrate(t, problem, h, n, cfg)
        errors.append(float(np.max(np.abs(traj.final_state - np.asarray(ref(t_final))))))
    if all(e < 1e-12 for e in errors):
        return OrderEstimate(None, (), tuple(errors), tuple(h_list), True)
    pairwise = tuple(
        math.log(errors[i] / errors[i + 1]) / math.log(h_list[i] / h_list[i + 1])
        for i in range(len(errors) - 1)
        if errors[i] > 0 and errors[i + 1] > 0
    )
    logs_h = np.log([h for h, e in zip(h_list, errors) if e > 0])
    logs_e = np.log([e for e in errors if e > 0])
    slope = float(np.polyfit(logs_h, logs_e, 1)[0])
    return OrderEstimate(slope, pairwise, tuple(errors), tuple(h_list), False)


def energy_drift(traj: Trajectory, problem: OdeProblem) -> float:
    """max_n |H(z_n) - H(z_0)| along a stored trajectory."""
    if problem.hamiltonian is None:
        raise ValueError("the problem has no Hamiltonian")
    values = np.array([problem.hamiltonian(z) for z in traj.states])
    return float(np.max(np.abs(values - values[0])))


def invariant_drift(traj: Trajectory, problem: OdeProblem, name: str) -> float:
    """max_n |Q(z_n) - Q(z_0)| for a named quadratic invariant."""
    q = problem.invariants[name]
    values = np.array([q(z) for z in traj.states])
    return float(np.max(np.abs(values - values[0])))


def symmetry_residual(
    t: ButcherTableau,
    problem: OdeProblem,
    z: np.ndarray,
    h: float,
    cfg: StepperConfig = StepperConfig(),
) -> float:
    """Round-trip defect |forward then backward step - identity| in max norm."""
    z = np.asarray(z, float)
    if h == 0.0:
        return 0.0
    forward = rk_step(t, problem, problem.t0, z, h, cfg)
    back = rk_step(t, problem, problem.t0 + h, forward, -h, cfg)
    return float(np.max(np.abs(back - z)))


def symplecticity_residual(
    t: ButcherTableau,
    problem: OdeProblem,
    z: np.ndarray,
    h: float,
    cfg: StepperConfig = StepperConfig(),
    fd_eps: float = 1e-6,
) -> float:
    """Departure of the one-step Jacobian from preserving the symplectic form.

    The Jacobian is estimated by central finite differences, so the result
    carries an O(fd_eps**2) + O(tol / fd_eps) budget on top of the method's
    own defect.
    """
    if h == 0.0:
        return 0.0
    z = np.asarray(z, float)
    j = problem.structure
    psi = np.zeros((problem.dim, problem.dim))
    for k in range(problem.dim):
        dz = np.zeros(problem.dim)
        dz[k] = fd_eps
        plus = rk_step(t, problem, problem.t0, z + dz, h, cfg)
        minus = rk_step(t, problem, problem.t0, z - dz, h, cfg)
        psi[:, k] = (plus - minus) / (2 * fd_eps)
    return float(np.max(np.abs(psi.T @ j @ psi - j)))


# -- built-in Hamiltonian test problems ---------------------------------------


def _harmonic(z0) -> OdeProblem:
    z0 = np.asarray(z0 if z0 is not None else [1.0, 0.0], float)

    def rhs(t, z):
        return np.array([z[1], -z[0]])

    def hamiltonian(z):
        return 0.5 * float(z @ z)

    q0, p0 = z0

    def reference(time):
        ct, st = math.cos(time), math.sin(time)
        return np.array([q0 * ct + p0 * st, -q0 * st + p0 * ct])

    return OdeProblem(
        dim=2,
        rhs=rhs,
        z0=z0,
        hamiltonian=hamiltonian,
        invariants={"energy": hamiltonian},
        lipschitz=1.0,
        reference=reference,
        name="harmonic",
    )


def _pendulum(z0) -> OdeProblem:
    z0 = np.asarray(z0 if z0 is not None else [0.0, 1.5], float)

    def rhs(t, z):
        return np.array([z[1], -math.sin(z[0])])

    def hamiltonian(z):
        return 0.5 * z[1] ** 2 - math.cos(z[0])

    return OdeProblem(
        dim=2,
        rhs=rhs,
        z0=z0,
        hamiltonian=hamiltonian,
        invariants={"energy": hamiltonian},
        lipschitz=1.0,
        name="pendulum",
    )


def _kepler(eccentricity: float) -> OdeProblem:
    e = float(eccentricity)
    if not 0 <= e < 1:
        raise ValueError(f"eccentricity must be in [0, 1), got {e}")
    z0 = np.array([1.0 - e, 0.0, 0.0, math.sqrt((1 + e) / (1 - e))])

    def rhs(t, z):
        q, p = z[:2], z[2:]
        r3 = float(q @ q) ** 1.5
        return np.concatenate([p, -q / r3])

    def hamiltonian(z):
        q, p = z[:2], z[2:]
        return 0.5 * float(p @ p) - 1.0 / math.hypot(q[0], q[1])

    def angular_momentum(z):
        return z[0] * z[3] - z[1] * z[2]

    def reference(time):
        # eccentric anomaly from Kepler's equation (unit period 2*pi)
        big_e = time
        for _ in range(60):
            delta = (big_e - e * math.sin(big_e) - time) / (1 - e * math.cos(big_e))
            big_e -= delta
            if abs(delta) < 1e-15:
                break
        s, c = math.sin(big_e), math.cos(big_e)
        edot = 1.0 / (1 - e * c)
        root = math.sqrt(1 - e * e)
        return np.array([c - e, root * s, -s * edot, root * c * edot])

    return OdeProblem(
        dim=4,
        rhs=rhs,
        z0=z0,
        hamiltonian=hamiltonian,
        invariants={"energy": hamiltonian, "angular_momentum": angular_momentum},
        lipschitz=2.0 / (1 - e) ** 3,
        reference=reference,
        name=f"kepler(e={e:g})",
    )


def builtin_problem(name: str, eccentricity: float = 0.6, z0=None) -> OdeProblem:
    """Standard Hamiltonian test set: harmonic, pendulum, kepler."""
    if name == "harmonic":
        return _harmonic(z0)
    if name == "pendulum":
        return _pendulum(z0)
    if name == "kepler":
        if z0 is not None:
            raise ValueError("the Kepler start is parameterized by eccentricity")
        return _kepler(eccentricity)
    raise ValueError(f"unknown problem {name!r} (expected harmonic, pendulum or kepler)")


def trajectory_to_csv(traj: Trajectory) -> str:
    dim = traj.states.shape[1]
    header = ["t"] + [f"z{k + 1}" for k in range(dim)] + ["iters"]
    lines = [",".join(header)]
    for tn, zn, it in zip(traj.times, traj.states, traj.iterations):
        lines.append(",".join([repr(float(tn))] + [repr(float(v)) for v in zn] + [str(int(it))]))
    return "\n".join(lines) + "\n"
