"""Stackelberg incentive game between parking-lot operators and vehicles.

Leaders (operators) post a reward rate per unit computing resource and unit
time; followers (vehicles) respond with how much on-board compute to share.
A vehicle's payoff is linear in the reward and quadratic in its energy cost,
so its best response has a closed form that is linear in the posted reward.
Substituting the best responses gives each operator a reduced profit whose
first-order condition is a quadratic in its own reward, yielding a closed-form
reaction map. Equilibria are found three ways: the reaction map's fixed point,
simultaneous ("Jacobi") or sequential ("Gauss-Seidel") gradient play with
central-difference derivative estimates, and an exhaustive grid best-response
oracle used for certification.

Unit convention: rewards/revenues are dimensionless rates, durations are in
minutes, compute in GHz-scale numbers, workloads in giga-cycles, and the
energy coefficient is dimensionless in [1, 10] (the physical 1e-28-scale
switched-capacitance factor is folded out so every quantity stays mantissa
sized).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "VehicleProfile",
    "PloProfile",
    "RewardVector",
    "EquilibriumReport",
    "GridOracleResult",
    "StandardFunctionReport",
    "SingularProfileError",
    "DegenerateGameError",
    "pairing_probabilities",
    "vehicle_best_response",
    "vehicle_utility",
    "demand_coefficients",
    "plo_expected_utility",
    "plo_expected_utility_reduced",
    "closed_form_best_response",
    "check_standard_function",
    "jacobi_solve",
    "grid_oracle_equilibrium",
    "single_leader_optimum",
]


class SingularProfileError(ValueError):
    """Vehicle energy coefficient or lot workload is zero."""


class DegenerateGameError(ValueError):
    """Opponent rewards sum to zero, so the competitive reaction map is undefined."""


@dataclass(frozen=True)
class VehicleProfile:
    """A follower: per-lot preference, parking duration, energy coefficient.

    ``capability_ghz`` records the vehicle's on-board compute for reporting;
    the quadratic energy cost already bounds the shared amount, so it does not
    enter the utilities.
    """

    preferences: np.ndarray  # (J,) in (0, 1)
    duration_min: float
    energy_coeff: float
    capability_ghz: float | None = None

    def __post_init__(self) -> None:
        prefs = np.asarray(self.preferences, dtype=np.float64)
        object.__setattr__(self, "preferences", prefs)
        if np.any(prefs <= 0.0) or np.any(prefs >= 1.0):
            raise ValueError("preferences must lie strictly inside (0, 1)")
        if self.duration_min <= 0:
            raise ValueError("parking duration must be positive")
        if self.energy_coeff <= 0:
            raise ValueError("energy coefficient must be positive")


@dataclass(frozen=True)
class PloProfile:
    """A leader: revenue rate, posted workload, reward bounds, capacity, penalty."""

    revenue_rate: float  # per unit compute and unit time
    workload_gcycles: float
    reward_min: float = 0.2
    reward_max: float = 3.0
    capacity: float = float("inf")  # limit on expected arrivals
    penalty_factor: float = 2.0

    def __post_init__(self) -> None:
        if not (0.0 < self.reward_min < self.reward_max):
            raise ValueError("need 0 < reward_min < reward_max")
        if self.reward_max > self.revenue_rate:
            raise ValueError("reward_max must not exceed the revenue rate")
        if self.workload_gcycles <= 0:
            raise ValueError("workload must be positive")
        if self.capacity < 0:
            raise ValueError("capacity must be >= 0")
        if self.penalty_factor < 0:
            raise ValueError("penalty factor must be >= 0")


@dataclass(frozen=True)
class RewardVector:
    """Joint leader strategy: one strictly positive reward rate per operator."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("reward vector must be a nonempty 1-d array")
        if np.any(vals <= 0.0):
            raise ValueError("rewards must be strictly positive")

    def check_bounds(self, plos: list[PloProfile]) -> None:
        for j, (r, plo) in enumerate(zip(self.values, plos)):
            if not (plo.reward_min - 1e-12 <= r <= plo.reward_max + 1e-12):
                raise ValueError(
                    f"reward {r} for operator {j} outside "
                    f"[{plo.reward_min}, {plo.reward_max}]"
                )


def _rewards(r) -> np.ndarray:
    vals = r.values if isinstance(r, RewardVector) else np.asarray(r, dtype=np.float64)
    if np.any(vals <= 0.0):
        raise ValueError("rewards must be strictly positive")
    return vals


def pairing_probabilities(r) -> np.ndarray:
    """Chance of a vehicle picking each lot: proportional to the posted reward.

    The same for every vehicle, so the expected arrivals at lot j are simply
    I * r_j / sum(r).
    """
    vals = _rewards(r)
    return vals / vals.sum()


def vehicle_best_response(
    vehicle: VehicleProfile, plo_index: int, plo: PloProfile, r_j: float
) -> tuple[float, float]:
    """Utility-maximizing compute share for one vehicle at one lot.

    The payoff ``p * r * f * d - kappa * f^2 * w`` is strictly concave in
    ``f``, so the optimum is the stationary point ``f* = coeff * r`` with
    ``coeff = p * d / (2 * kappa * w)``. Returns ``(f*, coeff)``.
    """
    if r_j <= 0:
        raise ValueError("reward must be positive")
    if vehicle.energy_coeff == 0 or plo.workload_gcycles == 0:
        raise SingularProfileError("energy coefficient and workload must be nonzero")
    coeff = (
        vehicle.preferences[plo_index]
        * vehicle.duration_min
        / (2.0 * vehicle.energy_coeff * plo.workload_gcycles)
    )
    return coeff * r_j, coeff


def vehicle_utility(
    vehicle: VehicleProfile, plo_index: int, plo: PloProfile, r_j: float, f: float
) -> float:
    """Reward earnings minus quadratic energy cost for sharing ``f``."""
    if f < 0:
        raise ValueError("compute share must be >= 0")
    p = vehicle.preferences[plo_index]
    return (
        p * r_j * f * vehicle.duration_min
        - vehicle.energy_coeff * f * f * plo.workload_gcycles
    )


def demand_coefficients(
    vehicles: list[VehicleProfile], plos: list[PloProfile]
) -> tuple[np.ndarray, np.ndarray]:
    """Best-response slopes lam (I, J) and their duration-weighted column sums.

    ``lam[i, j]`` is vehicle i's compute per unit reward at lot j; the column
    sum ``mu[j] = sum_i lam[i, j] * d_i`` is the lot's aggregate demand
    coefficient, the only vehicle statistic the reduced operator profit needs.
    """
    J = len(plos)
    lam = np.empty((len(vehicles), J))
    for i, v in enumerate(vehicles):
        if v.preferences.shape[0] != J:
            raise ValueError("vehicle preference vector length != number of lots")
        for j, plo in enumerate(plos):
            lam[i, j] = v.preferences[j] * v.duration_min / (
                2.0 * v.energy_coeff * plo.workload_gcycles
            )
    durations = np.array([v.duration_min for v in vehicles])
    mu = lam.T @ durations
    return lam, mu


def plo_expected_utility(
    j: int,
    r,
    vehicles: list[VehicleProfile],
    plos: list[PloProfile],
) -> float:
    """Operator j's expected profit with every vehicle playing its best response.

    Direct sum over vehicles: pairing probability times margin times the
    vehicle's compute share times its parking duration.
    """
    vals = _rewards(r)
    rho = vals[j] / vals.sum()
    plo = plos[j]
    total = 0.0
    for v in vehicles:
        f_star, _ = vehicle_best_response(v, j, plo, float(vals[j]))
        total += rho * (plo.revenue_rate - vals[j]) * f_star * v.duration_min
    return float(total)


def plo_expected_utility_reduced(
    j: int,
    r,
    mu: np.ndarray,
    plos: list[PloProfile],
) -> float:
    """Reduced form of the operator profit: mu_j (g r^2 - r^3) / sum(r)."""
    vals = _rewards(r)
    g = plos[j].revenue_rate
    rj = vals[j]
    return float(mu[j] * (g * rj * rj - rj**3) / vals.sum())


def _reaction_quadratic(r_j: float, opponent_sum: float, g: float) -> float:
    """Numerator of the profit derivative: -2 r^2 - (3 S - g) r + 2 g S."""
    return -2.0 * r_j * r_j - (3.0 * opponent_sum - g) * r_j + 2.0 * g * opponent_sum


def closed_form_best_response(j: int, r, plos: list[PloProfile]) -> float:
    """Operator j's optimal reward given the others, capped at its budget.

    The unclipped value is the positive root of the first-order-condition
    quadratic; with S the opponents' total reward it equals
    ``0.25 * (sqrt((3S - g)^2 + 16 g S) - 3S + g)``.
    """
    vals = _rewards(r)
    g = plos[j].revenue_rate
    opponent_sum = float(vals.sum() - vals[j])
    if opponent_sum <= 0.0:
        raise DegenerateGameError(
            "no competing rewards: a single active leader's optimum is g / 2 "
            "(see single_leader_optimum)"
        )
    root = 0.25 * (
        np.sqrt((3.0 * opponent_sum - g) ** 2 + 16.0 * g * opponent_sum)
        - 3.0 * opponent_sum
        + g
    )
    residual = _reaction_quadratic(root, opponent_sum, g)
    scale = max(1.0, abs(g), opponent_sum)
    if abs(residual) > 1e-7 * scale * scale:
        raise AssertionError(
            f"reaction-map root check failed: residual {residual} at "
            f"(S={opponent_sum}, g={g})"
        )
    return float(min(root, plos[j].reward_max))


def single_leader_optimum(plo: PloProfile) -> float:
    """With no competitors the reduced profit is mu (g r - r^2): optimum g / 2."""
    return min(max(plo.revenue_rate / 2.0, plo.reward_min), plo.reward_max)


@dataclass(frozen=True)
class StandardFunctionReport:
    """Numeric sweep of the reaction map's fixed-point-iteration properties."""

    n_samples: int
    n_checks: int
    violations: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def check_standard_function(
    g: float,
    samples: np.ndarray,
    alphas: np.ndarray | None = None,
    deltas: np.ndarray | None = None,
    reward_max: float = np.inf,
) -> StandardFunctionReport:
    """Verify positivity, monotonicity and scalability of the reaction map.

    ``samples`` is (N, J) of strictly positive reward vectors. For every
    sample and every coordinate the unclipped reaction value must be positive,
    strictly increasing in the opponents' total, and satisfy
    ``alpha * phi(r) > phi(alpha * r)`` for the paired ``alpha > 1``. Returns
    a report listing witnesses instead of raising.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or np.any(samples <= 0):
        raise ValueError("samples must be (N, J) strictly positive")
    n = samples.shape[0]
    if alphas is None:
        alphas = np.full(n, 1.5)
    if deltas is None:
        deltas = np.full(n, 0.1)
    violations: list[dict] = []
    checks = 0

    def phi(vec: np.ndarray, j: int) -> float:
        opp = float(vec.sum() - vec[j])
        root = 0.25 * (np.sqrt((3 * opp - g) ** 2 + 16 * g * opp) - 3 * opp + g)
        return float(root)

    for k in range(n):
        vec = samples[k]
        for j in range(vec.size):
            base = phi(vec, j)
            checks += 3
            if not base > 0:
                violations.append({"kind": "positivity", "sample": k, "j": j})
            bumped = vec.copy()
            # raise one opponent so the opponent total strictly grows
            bumped[(j + 1) % vec.size] += deltas[k]
            if not phi(bumped, j) > base:
                violations.append({"kind": "monotonicity", "sample": k, "j": j})
            a = float(alphas[k])
            if a > 1.0 and not a * base > phi(a * vec, j):
                violations.append({"kind": "scalability", "sample": k, "j": j})
    return StandardFunctionReport(
        n_samples=n, n_checks=checks, violations=violations
    )


@dataclass(frozen=True)
class EquilibriumReport:
    """Outcome of gradient play: strategies, profits, diagnostics."""

    r_star: RewardVector
    iterations: int
    converged: bool
    utilities: np.ndarray  # (J,)
    expected_arrivals: np.ndarray  # (J,), I * r_j / sum(r)
    best_response_residuals: np.ndarray  # (J,), |r_j - clipped reaction value|
    concavity_condition_ok: np.ndarray  # (J,), 3 * opponent_sum > g at solution
    mode: str

    def to_dict(self) -> dict:
        return {
            "r_star": self.r_star.values.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
            "utilities": self.utilities.tolist(),
            "expected_arrivals": self.expected_arrivals.tolist(),
            "best_response_residuals": self.best_response_residuals.tolist(),
            "concavity_condition_ok": self.concavity_condition_ok.tolist(),
            "mode": self.mode,
        }


def _clip_rewards(vals: np.ndarray, plos: list[PloProfile]) -> np.ndarray:
    lo = np.array([p.reward_min for p in plos])
    hi = np.array([p.reward_max for p in plos])
    return np.clip(vals, lo, hi)


def _finalize_report(
    vals: np.ndarray,
    vehicles: list[VehicleProfile],
    plos: list[PloProfile],
    mu: np.ndarray,
    iterations: int,
    converged: bool,
    mode: str,
) -> EquilibriumReport:
    J = len(plos)
    utilities = np.array(
        [plo_expected_utility_reduced(j, vals, mu, plos) for j in range(J)]
    )
    arrivals = len(vehicles) * pairing_probabilities(vals)
    residuals = np.empty(J)
    concavity = np.empty(J, dtype=bool)
    for j in range(J):
        opp = vals.sum() - vals[j]
        concavity[j] = 3.0 * opp > plos[j].revenue_rate
        try:
            residuals[j] = abs(vals[j] - closed_form_best_response(j, vals, plos))
        except DegenerateGameError:
            residuals[j] = abs(vals[j] - single_leader_optimum(plos[j]))
    return EquilibriumReport(
        r_star=RewardVector(vals.copy()),
        iterations=iterations,
        converged=converged,
        utilities=utilities,
        expected_arrivals=arrivals,
        best_response_residuals=residuals,
        concavity_condition_ok=concavity,
        mode=mode,
    )


def jacobi_solve(
    plos: list[PloProfile],
    vehicles: list[VehicleProfile],
    r0=None,
    learning_rate: float | np.ndarray = 1e-3,
    delta: float = 1e-2,
    max_iters: int = 100_000,
    tol: float = 1e-4,
    mode: str = "jacobi",
    trace: list | None = None,
) -> EquilibriumReport:
    """Gradient play on rewards with central-difference derivative estimates.

    Each step moves ``r_j`` by ``lr_j * r_j * dV_j/dr_j`` and projects back
    into the reward bounds. ``mode="jacobi"`` updates all operators from the
    same iterate; ``mode="gauss-seidel"`` sweeps them in index order, each
    seeing the freshest values. Non-convergence is reported, not raised.
    """
    if mode not in ("jacobi", "gauss-seidel"):
        raise ValueError("mode must be 'jacobi' or 'gauss-seidel'")
    if delta <= 0:
        raise ValueError("delta must be positive")
    J = len(plos)
    lr = np.broadcast_to(np.asarray(learning_rate, dtype=np.float64), (J,))
    if np.any(lr <= 0):
        raise ValueError("learning rates must be positive")
    _, mu = demand_coefficients(vehicles, plos)
    if r0 is None:
        vals = np.array([(p.reward_min + p.reward_max) / 2.0 for p in plos])
    else:
        vals = _rewards(r0).copy()
        RewardVector(vals).check_bounds(plos)

    def derivative(j: int, current: np.ndarray) -> float:
        up = current.copy()
        up[j] = current[j] + delta
        down = current.copy()
        down[j] = max(current[j] - delta, 1e-12)
        v_plus = plo_expected_utility_reduced(j, up, mu, plos)
        v_minus = plo_expected_utility_reduced(j, down, mu, plos)
        return (v_plus - v_minus) / (up[j] - down[j])

    converged = False
    iterations = 0
    for k in range(1, max_iters + 1):
        iterations = k
        prev = vals.copy()
        if mode == "jacobi":
            grads = np.array([derivative(j, prev) for j in range(J)])
            vals = _clip_rewards(prev + lr * prev * grads, plos)
        else:
            for j in range(J):
                step = lr[j] * vals[j] * derivative(j, vals)
                vals[j] = np.clip(
                    vals[j] + step, plos[j].reward_min, plos[j].reward_max
                )
        if trace is not None:
            trace.append(vals.copy())
        if np.max(np.abs(vals - prev)) < tol:
            converged = True
            break
    return _finalize_report(vals, vehicles, plos, mu, iterations, converged, mode)


@dataclass(frozen=True)
class GridOracleResult:
    """Fixed point of exhaustive best responses on per-operator reward grids."""

    r_star: RewardVector
    sweeps: int
    converged: bool
    cycle_detected: bool
    grid_step: np.ndarray  # (J,)


def grid_oracle_equilibrium(
    plos: list[PloProfile],
    vehicles: list[VehicleProfile],
    grid_points: int = 1000,
    max_sweeps: int = 500,
) -> GridOracleResult:
    """Brute-force certification: iterate exact grid argmax best responses.

    Each operator's response is the exhaustive argmax of its profit over a
    uniform grid on its reward interval (ties break to the lowest index).
    Stops at a sweep with no change; a revisited joint grid state short of a
    fixed point is flagged as a cycle.
    """
    if grid_points < 100:
        raise ValueError("grid_points must be >= 100")
    J = len(plos)
    _, mu = demand_coefficients(vehicles, plos)
    grids = [np.linspace(p.reward_min, p.reward_max, grid_points) for p in plos]
    idx = np.full(J, grid_points // 2, dtype=int)
    vals = np.array([grids[j][idx[j]] for j in range(J)])
    seen: set[tuple[int, ...]] = {tuple(idx)}
    converged = False
    cycle = False
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        changed = False
        for j in range(J):
            others = vals.sum() - vals[j]
            candidates = grids[j]
            g = plos[j].revenue_rate
            profits = mu[j] * (g * candidates**2 - candidates**3) / (
                others + candidates
            )
            best = int(np.argmax(profits))
            if best != idx[j]:
                idx[j] = best
                vals[j] = candidates[best]
                changed = True
        if not changed:
            converged = True
            break
        key = tuple(idx)
        if key in seen:
            cycle = True
            break
        seen.add(key)
    step = np.array(
        [(p.reward_max - p.reward_min) / (grid_points - 1) for p in plos]
    )
    return GridOracleResult(
        r_star=RewardVector(vals.copy()),
        sweeps=sweeps,
        converged=converged,
        cycle_detected=cycle,
        grid_step=step,
    )
