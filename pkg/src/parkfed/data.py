"""Occupancy series ingestion and sliding-window dataset construction.

One parking lot yields one :class:`RawSeries` of fractional occupancy on a
30-minute grid, either parsed from the Birmingham-style CSV export or
synthesized deterministically. :func:`make_windows` turns a series into the
supervised pairs consumed by the forecasting model: ``z`` consecutive
occupancy values predict the value that follows them.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

__all__ = [
    "RawSeries",
    "TimeSeriesDataset",
    "CsvColumns",
    "ParseError",
    "load_birmingham_csv",
    "synthesize_series",
    "make_windows",
]


class ParseError(ValueError):
    """Raised when a CSV row cannot be interpreted."""


@dataclass(frozen=True)
class RawSeries:
    """Occupancy-rate history of a single parking lot.

    ``occupancy[k]`` is occupied/capacity at ``timestamps[k]``, clamped to
    [0, 1]. Timestamps are strictly increasing.
    """

    lot_id: str
    timestamps: tuple[datetime, ...]
    occupancy: np.ndarray
    capacity: int

    def __post_init__(self) -> None:
        occ = np.asarray(self.occupancy, dtype=np.float64)
        object.__setattr__(self, "occupancy", occ)
        if len(self.timestamps) != occ.shape[0]:
            raise ValueError("timestamps and occupancy must have equal length")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ValueError("timestamps must be strictly increasing")
        if occ.size and (occ.min() < 0.0 or occ.max() > 1.0):
            raise ValueError("occupancy values must lie in [0, 1]")

    def __len__(self) -> int:
        return self.occupancy.shape[0]


@dataclass(frozen=True)
class TimeSeriesDataset:
    """Windowed supervised pairs for one lot, split into train and test.

    ``inputs[k]`` holds ``z`` consecutive occupancy values and ``targets[k]``
    the value immediately after them. The first ``split_index`` pairs are the
    training set; ordering follows the source series, so the test set is the
    chronological tail.
    """

    lot_id: str
    inputs: np.ndarray  # (n_windows, z)
    targets: np.ndarray  # (n_windows,)
    split_index: int

    def __post_init__(self) -> None:
        if self.inputs.ndim != 2 or self.targets.ndim != 1:
            raise ValueError("inputs must be 2-d and targets 1-d")
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ValueError("inputs and targets must have equal length")
        if not (0 < self.split_index <= self.inputs.shape[0]):
            raise ValueError("split_index must lie in (0, n_windows]")

    @property
    def window_size(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_windows(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_train(self) -> int:
        return self.split_index

    def train_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.inputs[: self.split_index], self.targets[: self.split_index]

    def test_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.inputs[self.split_index :], self.targets[self.split_index :]


@dataclass(frozen=True)
class CsvColumns:
    """Column names used by :func:`load_birmingham_csv` (overridable in config)."""

    lot_id: str = "SystemCodeNumber"
    capacity: str = "Capacity"
    occupied: str = "Occupancy"
    timestamp: str = "LastUpdated"
    timestamp_formats: tuple[str, ...] = field(
        default=("%Y-%m-%d %H:%M:%S", "%d/%m/%Y %H:%M", "%Y-%m-%dT%H:%M:%S")
    )


def _parse_timestamp(raw: str, formats: tuple[str, ...], row_num: int) -> datetime:
    for fmt in formats:
        try:
            return datetime.strptime(raw.strip(), fmt)
        except ValueError:
            continue
    raise ParseError(f"row {row_num}: unparseable timestamp {raw!r}")


def load_birmingham_csv(
    path: str | Path,
    lot_ids: list[str],
    columns: CsvColumns | None = None,
) -> list[RawSeries]:
    """Read per-lot occupancy histories from a Birmingham-style CSV export.

    Rows are grouped by lot, sorted by timestamp, duplicate timestamps dropped
    (first occurrence wins), and occupancy normalized to occupied/capacity
    clamped into [0, 1]. Returns one series per requested lot id, in the
    requested order.
    """
    cols = columns or CsvColumns()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"CSV file not found: {path}")
    wanted = set(lot_ids)
    rows: dict[str, list[tuple[datetime, float, int]]] = {lot: [] for lot in lot_ids}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(f"{path}: empty CSV")
        missing = [
            c
            for c in (cols.lot_id, cols.capacity, cols.occupied, cols.timestamp)
            if c not in reader.fieldnames
        ]
        if missing:
            raise ParseError(f"{path}: missing columns {missing}")
        for row_num, row in enumerate(reader, start=2):
            lot = row[cols.lot_id].strip()
            if lot not in wanted:
                continue
            try:
                capacity = int(float(row[cols.capacity]))
                occupied = float(row[cols.occupied])
            except (TypeError, ValueError) as exc:
                raise ParseError(f"row {row_num}: non-numeric field ({exc})") from exc
            if capacity <= 0:
                raise ParseError(f"row {row_num}: non-positive capacity {capacity}")
            ts = _parse_timestamp(row[cols.timestamp], cols.timestamp_formats, row_num)
            rows[lot].append((ts, occupied, capacity))

    out = []
    for lot in lot_ids:
        if not rows[lot]:
            raise KeyError(f"lot id {lot!r} not present in {path}")
        ordered = sorted(rows[lot], key=lambda item: item[0])
        timestamps: list[datetime] = []
        occupancy: list[float] = []
        capacity = ordered[0][2]
        for ts, occupied, cap in ordered:
            if timestamps and ts == timestamps[-1]:
                continue  # duplicate timestamp: keep first
            timestamps.append(ts)
            occupancy.append(min(max(occupied / cap, 0.0), 1.0))
            capacity = cap
        out.append(
            RawSeries(
                lot_id=lot,
                timestamps=tuple(timestamps),
                occupancy=np.asarray(occupancy),
                capacity=capacity,
            )
        )
    return out


def synthesize_series(
    seed: int,
    days: int,
    slots_per_day: int = 19,
    *,
    base: float = 0.45,
    daily_amplitude: float = 0.30,
    trend_per_day: float = 0.02,
    noise_std: float = 0.05,
    capacity: int = 100,
    lot_id: str | None = None,
) -> RawSeries:
    """Deterministic synthetic occupancy: daily sinusoid + slow trend + noise.

    The same seed always produces the same series. The default 19 slots per
    day mirror a 30-minute grid from 08:00 to 17:00.
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    if slots_per_day < 2:
        raise ValueError("slots_per_day must be >= 2")
    rng = np.random.default_rng(seed)
    n = days * slots_per_day
    slot = np.arange(n)
    phase = 2.0 * np.pi * (slot % slots_per_day) / slots_per_day
    sinusoid = daily_amplitude * np.sin(phase)
    trend = trend_per_day * (slot / slots_per_day)
    noise = noise_std * rng.standard_normal(n)
    occupancy = np.clip(base + sinusoid + trend + noise, 0.0, 1.0)
    start = datetime(2020, 1, 1, 8, 0, 0)
    timestamps = tuple(start + _slot_delta(int(k), slots_per_day) for k in slot)
    return RawSeries(
        lot_id=lot_id or f"SYN{seed:04d}",
        timestamps=timestamps,
        occupancy=occupancy,
        capacity=capacity,
    )


def _slot_delta(k: int, slots_per_day: int) -> timedelta:
    """Day boundaries restart the 30-minute grid, like the source data."""
    day, within = divmod(k, slots_per_day)
    return timedelta(days=day, minutes=30 * within)


def make_windows(
    series: RawSeries, z: int, train_fraction: float = 0.8
) -> TimeSeriesDataset:
    """Slide a window of size ``z`` over the series to build supervised pairs.

    A series of length ``y`` yields ``y - z`` pairs; pair ``k`` is
    ``(values[k .. k+z-1], values[k+z])``. The first
    ``floor(train_fraction * (y - z))`` pairs form the training split.
    """
    if z < 1:
        raise ValueError("window size must be >= 1")
    if not (0.0 < train_fraction < 1.0):
        raise ValueError("train_fraction must lie in (0, 1)")
    y = len(series)
    if y < z + 1:
        raise ValueError(
            f"series {series.lot_id!r} has {y} points; need at least {z + 1} "
            f"for window size {z}"
        )
    n = y - z
    values = series.occupancy
    inputs = np.empty((n, z), dtype=np.float64)
    for k in range(n):
        inputs[k] = values[k : k + z]
    targets = values[z : z + n].copy()
    split_index = int(np.floor(train_fraction * n))
    split_index = max(split_index, 1)
    return TimeSeriesDataset(
        lot_id=series.lot_id, inputs=inputs, targets=targets, split_index=split_index
    )
