"""Coordinator/client simulation of collaborative forecaster training.

One round: every client copies the current global model, runs local
mini-batch SGD over its own training windows, and hands back updated weights
with its training-set size. The coordinator averages the submissions
coordinate-wise, weighting each client by its share of the pooled training
data, then evaluates the new global model on every client's held-out tail.
Only weights move between parties; the raw occupancy series never leave the
clients.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import TimeSeriesDataset
from .neural import (
    ModelWeights,
    evaluate_mse,
    flatten,
    init_model,
    loss_and_grad,
    sgd_step,
    unflatten,
)

__all__ = [
    "FederationConfig",
    "RoundReport",
    "local_train",
    "aggregate",
    "run_federation",
    "run_isolated_baseline",
]

DEFAULT_HIDDEN = 256
DEFAULT_HEAD_HIDDEN = 32


@dataclass(frozen=True)
class FederationConfig:
    rounds: int
    client_ids: tuple[str, ...]
    seed: int = 0
    local_epochs: int = 1
    batch_size: int = 64
    learning_rate: float = 1e-2
    hidden_size: int = DEFAULT_HIDDEN
    head_hidden: int = DEFAULT_HEAD_HIDDEN

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.local_epochs < 1:
            raise ValueError("local_epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")


@dataclass(frozen=True)
class RoundReport:
    """Per-round metrics: local model quality and global model quality."""

    round_index: int
    train_mse: dict[str, float]  # client's updated local model, train split
    test_mse: dict[str, float]  # client's updated local model, test split
    global_test_mse: dict[str, float]  # aggregated model, per-client test split
    duration_s: float = field(compare=False, default=0.0)


def local_train(
    global_model: ModelWeights,
    dataset: TimeSeriesDataset,
    cfg: FederationConfig,
) -> tuple[ModelWeights, int]:
    """Mini-batch SGD from the global weights on this client's training split.

    Batch order is drawn from ``cfg.seed``, so identical inputs give
    bit-identical outputs. Returns the updated weights and the training-pair
    count used as the aggregation weight.
    """
    windows, targets = dataset.train_pairs()
    n = windows.shape[0]
    if n == 0:
        raise ValueError(f"client {dataset.lot_id!r} has no training pairs")
    rng = np.random.default_rng(cfg.seed)
    model = global_model.copy()
    for _ in range(cfg.local_epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, grad = loss_and_grad(model, windows[idx], targets[idx])
            if cfg.learning_rate > 0:
                model = sgd_step(model, grad, cfg.learning_rate)
    return model, n


def aggregate(updates: list[tuple[ModelWeights, int]]) -> ModelWeights:
    """Coordinate-wise mean of client weights, weighted by sample counts."""
    if not updates:
        raise ValueError("no updates to aggregate")
    total = sum(count for _, count in updates)
    if total <= 0:
        raise ValueError("total sample count must be positive")
    reference = updates[0][0]
    ref_size = flatten(reference).size
    acc = np.zeros(ref_size)
    for model, count in updates:
        flat = flatten(model)
        if flat.size != ref_size:
            raise ValueError("client models have mismatched shapes")
        acc += (count / total) * flat
    return unflatten(acc, reference)


def _client_cfg(cfg: FederationConfig, round_index: int, client_pos: int) -> FederationConfig:
    # distinct, reproducible batch-order stream per (round, client)
    derived = cfg.seed * 1_000_003 + round_index * 9_973 + client_pos
    return replace(cfg, seed=derived)


def run_federation(
    datasets: dict[str, TimeSeriesDataset],
    cfg: FederationConfig,
    initial: ModelWeights | None = None,
) -> tuple[ModelWeights, list[RoundReport]]:
    """Full training loop: broadcast, local training, aggregation, evaluation.

    Clients are processed in sorted-id order so the summation order (and
    therefore every emitted float) is independent of dict ordering.
    """
    if not datasets:
        raise ValueError("need at least one client")
    missing = [c for c in cfg.client_ids if c not in datasets]
    if missing:
        raise ValueError(f"datasets missing for clients {missing}")
    order = sorted(cfg.client_ids)
    model = initial if initial is not None else init_model(
        cfg.seed, hidden_size=cfg.hidden_size, head_hidden=cfg.head_hidden
    )
    reports: list[RoundReport] = []
    for rnd in range(cfg.rounds):
        t0 = time.perf_counter()
        updates: list[tuple[ModelWeights, int]] = []
        train_mse: dict[str, float] = {}
        test_mse: dict[str, float] = {}
        for pos, client in enumerate(order):
            ds = datasets[client]
            updated, count = local_train(model, ds, _client_cfg(cfg, rnd, pos))
            updates.append((updated, count))
            train_mse[client] = evaluate_mse(updated, *ds.train_pairs())
            test_mse[client] = evaluate_mse(updated, *ds.test_pairs())
        model = aggregate(updates)
        global_test = {
            client: evaluate_mse(model, *datasets[client].test_pairs())
            for client in order
        }
        reports.append(
            RoundReport(
                round_index=rnd,
                train_mse=train_mse,
                test_mse=test_mse,
                global_test_mse=global_test,
                duration_s=time.perf_counter() - t0,
            )
        )
    return model, reports


def run_isolated_baseline(
    dataset: TimeSeriesDataset,
    cfg: FederationConfig,
    initial: ModelWeights | None = None,
) -> tuple[ModelWeights, list[RoundReport]]:
    """Same local loop with no aggregation: one client training on its own."""
    client = dataset.lot_id
    solo = replace(cfg, client_ids=(client,))
    return run_federation({client: dataset}, solo, initial=initial)


def weighted_mean_test_mse(
    report: RoundReport, datasets: dict[str, TimeSeriesDataset]
) -> float:
    """Global-model test MSE pooled over clients, weighted by training size."""
    weights = {c: datasets[c].n_train for c in report.global_test_mse}
    total = sum(weights.values())
    return sum(
        report.global_test_mse[c] * weights[c] / total for c in report.global_test_mse
    )
