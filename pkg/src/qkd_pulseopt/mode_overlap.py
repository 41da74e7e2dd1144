"""Discrete Tx-Rx mode overlaps ``c_j`` and the ISI power they imply."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .pulse_shaping import TapVector

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class OverlapCoefficients:
    """Overlap ``c_j`` of the transmitted pulse with the receiver mode shifted by
    ``j`` symbols. Only lags with nonzero support overlap are stored."""

    lags: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if lags.shape != values.shape:
            raise ValueError("lags and values must have the same shape")
        if 0 not in lags:
            raise ValueError("overlap coefficients must include lag 0")
        order = np.argsort(lags)
        object.__setattr__(self, "lags", lags[order])
        object.__setattr__(self, "values", values[order])

    @classmethod
    def from_dict(cls, c: dict[int, float]) -> "OverlapCoefficients":
        return cls(np.fromiter(c.keys(), dtype=np.int64), np.fromiter(c.values(), dtype=float))

    @property
    def c(self) -> dict[int, float]:
        return {int(j): float(v) for j, v in zip(self.lags, self.values)}

    @property
    def c0(self) -> float:
        return float(self.values[self.lags == 0][0])

    @property
    def isi_power(self) -> float:
        off = self.values[self.lags != 0]
        return float(np.dot(off, off))

    def __getitem__(self, lag: int) -> float:
        hit = self.values[self.lags == lag]
        return float(hit[0]) if hit.size else 0.0


def _check_pair(tx: TapVector, rx: TapVector):
    if tx.sps != rx.sps:
        raise ValueError(f"sps mismatch: tx has {tx.sps}, rx has {rx.sps}")
    for name, f in (("tx", tx), ("rx", rx)):
        if len(f) % 2 == 0:
            raise ValueError(f"{name} filter must have odd length, got {len(f)}")
        if abs(f.energy - 1.0) > _NORM_TOL:
            raise ValueError(
                f"{name} filter is not unit-energy (energy={f.energy!r}); "
                "apply normalize_energy first"
            )


def _lag_selection(len_tx: int, len_rx: int, sps: int):
    """Indices into the full cross-correlation that land on symbol lags, and the
    lags themselves."""
    # full[i] = sum_n tx[n + s] rx[n] with sample shift s = i - (len_rx - 1);
    # symbol lag j corresponds to s = j*sps + (centre_tx - centre_rx)
    delta = (len_tx - 1) // 2 - (len_rx - 1) // 2
    shifts = np.arange(len_tx + len_rx - 1) - (len_rx - 1)
    on_grid = (shifts - delta) % sps == 0
    idx = np.nonzero(on_grid)[0]
    lags = (shifts[idx] - delta) // sps
    return idx, lags


def mode_overlap(tx: TapVector, rx: TapVector) -> OverlapCoefficients:
    """``c_j = sum_k rx[k] tx[k + j*sps + delta]`` for every lag with support overlap,
    ``delta`` aligning the centre taps. Both filters must be unit-energy and odd."""
    _check_pair(tx, rx)
    full = np.correlate(tx.taps, rx.taps, mode="full")
    idx, lags = _lag_selection(len(tx), len(rx), tx.sps)
    return OverlapCoefficients(lags, full[idx])


def overlap_operator(num_taps: int, rx: TapVector) -> tuple[np.ndarray, np.ndarray]:
    """Matrix ``W`` with ``c = W @ u`` for any length-``num_taps`` transmit vector ``u``.

    Returns ``(lags, W)``; row ``lags == 0`` gives ``c_0``. Used to evaluate many
    candidate pulses at once.
    """
    if num_taps % 2 == 0 or num_taps < 1:
        raise ValueError(f"num_taps must be a positive odd integer, got {num_taps}")
    idx, lags = _lag_selection(num_taps, len(rx), rx.sps)
    eye = np.eye(num_taps)
    cols = [np.correlate(eye[m], rx.taps, mode="full")[idx] for m in range(num_taps)]
    return lags, np.column_stack(cols)


def isi_summary(overlap: OverlapCoefficients) -> tuple[float, float]:
    """``(c0**2, sum_{j != 0} c_j**2)``."""
    c0 = overlap.c0
    return c0 * c0, overlap.isi_power


def write_overlap_csv(overlap: OverlapCoefficients, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lag", "c"])
        for j, v in zip(overlap.lags, overlap.values):
            writer.writerow([int(j), repr(float(v))])
