"""Seeded population sampling and the three capacity scenarios."""
from __future__ import annotations

import numpy as np

from ..game import PloProfile, VehicleProfile, demand_coefficients
from .config import PopulationConfig

__all__ = ["CAPACITY_CASES", "preset_population", "expected_workload"]

# Free-space vectors for the three studied scenarios (J = 3).
CAPACITY_CASES: dict[int, tuple[float, float, float]] = {
    1: (15.0, 20.0, 5.0),
    2: (25.0, 20.0, 5.0),
    3: (35.0, 20.0, 5.0),
}

_PREF_EPS = 1e-9  # preferences live in the open interval (0, 1)


def expected_workload(rate_per_min: float, size_gcycles: float, period_min: float) -> float:
    """Mean aggregate workload of a Poisson task stream over the service period.

    Tasks arrive at ``rate_per_min`` and each carries ``size_gcycles``, so the
    expected total handed to one vehicle is rate * size * period.
    """
    return rate_per_min * size_gcycles * period_min


def preset_population(
    seed: int, cfg: PopulationConfig | None = None
) -> tuple[list[PloProfile], list[VehicleProfile]]:
    """Sample operators and vehicles with the default parameter distributions.

    The same seed always yields the same population. Operator workloads come
    from the per-lot Poisson task model aggregated to an expected per-vehicle
    workload; the overflow penalty is optionally expressed per unit of the
    lot's demand coefficient so it stays commensurate with the profit scale.
    """
    cfg = cfg or PopulationConfig()
    rng = np.random.default_rng(seed)
    J = cfg.n_plos

    task_rate = rng.uniform(*cfg.task_rate_range, size=J)
    task_size = rng.uniform(*cfg.task_size_range, size=J)
    workloads = np.array(
        [
            expected_workload(r, s, cfg.service_period_min)
            for r, s in zip(task_rate, task_size)
        ]
    )
    if cfg.revenue_symmetric is not None:
        revenues = np.full(J, float(cfg.revenue_symmetric))
    else:
        revenues = rng.uniform(*cfg.revenue_range, size=J)

    vehicles = []
    for _ in range(cfg.n_vehicles):
        prefs = rng.uniform(*cfg.preference_range, size=J)
        prefs = np.clip(prefs, _PREF_EPS, 1.0 - _PREF_EPS)
        vehicles.append(
            VehicleProfile(
                preferences=prefs,
                duration_min=float(rng.uniform(*cfg.duration_range)),
                energy_coeff=float(rng.uniform(*cfg.energy_coeff_range)),
                capability_ghz=float(rng.uniform(*cfg.capability_range)),
            )
        )

    base_plos = [
        PloProfile(
            revenue_rate=float(g),
            workload_gcycles=float(w),
            reward_min=cfg.reward_min,
            reward_max=cfg.reward_max,
            penalty_factor=cfg.penalty_factor,
        )
        for g, w in zip(revenues, workloads)
    ]
    if cfg.penalty_per_demand:
        _, mu = demand_coefficients(vehicles, base_plos)
        base_plos = [
            PloProfile(
                revenue_rate=p.revenue_rate,
                workload_gcycles=p.workload_gcycles,
                reward_min=p.reward_min,
                reward_max=p.reward_max,
                penalty_factor=cfg.penalty_factor * float(m),
            )
            for p, m in zip(base_plos, mu)
        ]
    return base_plos, vehicles
