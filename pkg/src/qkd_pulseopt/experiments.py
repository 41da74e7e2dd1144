"""Parameter sweeps producing plot-ready tables of key rate versus distance,
key spectral efficiency grids and filter amplitude responses."""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .mode_overlap import mode_overlap
from .optimizers import OptimizationError, OptimizerConfig, optimize
from .pulse_shaping import TapVector, frequency_response, rrc_taps
from .security_rate import (
    SKR_CSV_COLUMNS,
    LinkParams,
    SkrReport,
    channel_transmittance,
    secret_key_rate,
    zero_mismatch_bound,
)

logger = logging.getLogger(__name__)

FIG1_CSV = "fig1_skr_vs_distance.csv"
FIG2_CSV = "fig2_skr_vs_distance_noise.csv"
FIG3_CSV = "fig3_kse_grid.csv"
FIG4_CSV = "fig4_freq_response.csv"

VARIANTS = ("bound", "unoptimized", "optimized")

SWEEP_COLUMNS = ("variant", "roll_off", "n_bar", "n_ch", "beta") + SKR_CSV_COLUMNS + ("status",)


def _as_tuple(values, name):
    out = tuple(float(v) for v in values)
    if not out:
        raise ValueError(f"{name} must be nonempty")
    return out


@dataclass(frozen=True)
class SweepSpec:
    distances_km: tuple = (0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0)
    roll_offs: tuple = (0.1, 0.5, 0.9)
    n_bars: tuple = (10.0, 100.0, 1000.0)
    n_chs: tuple = (0.0,)
    attenuation_db_per_km: float = 0.2
    tx_num_taps: int = 13
    rx_num_taps: int = 101
    sps: int = 4
    beta: float = 0.95
    optimize: bool = True
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    warm_start: bool = True
    conditional: str = "corrected"

    def __post_init__(self):
        for name in ("distances_km", "roll_offs", "n_bars", "n_chs"):
            object.__setattr__(self, name, _as_tuple(getattr(self, name), name))
        if any(d < 0 for d in self.distances_km):
            raise ValueError("distances_km must be nonnegative")
        if any(not 0 <= a <= 1 for a in self.roll_offs):
            raise ValueError("roll_offs must lie in [0, 1]")
        if any(n <= 0 for n in self.n_bars):
            raise ValueError("n_bars must be > 0")
        if any(n < 0 for n in self.n_chs):
            raise ValueError("n_chs must be >= 0")
        if self.attenuation_db_per_km < 0:
            raise ValueError("attenuation_db_per_km must be >= 0")
        for name in ("tx_num_taps", "rx_num_taps"):
            n = getattr(self, name)
            if int(n) != n or n < 1 or n % 2 == 0:
                raise ValueError(f"{name} must be a positive odd integer, got {n}")
        if int(self.sps) != self.sps or self.sps < 1:
            raise ValueError("sps must be a positive integer")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")
        if self.optimizer.num_taps != self.tx_num_taps:
            object.__setattr__(
                self, "optimizer", replace(self.optimizer, num_taps=self.tx_num_taps, init=None)
            )

    def link(self, distance_km: float, roll_off: float, n_bar: float, n_ch: float) -> LinkParams:
        return LinkParams(
            n_bar=n_bar,
            tau_ch=channel_transmittance(distance_km, self.attenuation_db_per_km),
            n_ch=n_ch,
            beta=self.beta,
            roll_off=roll_off,
            conditional=self.conditional,
        )


def _row(variant, roll_off, n_bar, n_ch, beta, report: SkrReport | None, status="ok", distance=None):
    row = {"variant": variant, "roll_off": roll_off, "n_bar": n_bar, "n_ch": n_ch, "beta": beta}
    if report is None:
        row.update({k: float("nan") for k in SKR_CSV_COLUMNS})
        row["distance_km"] = distance
    else:
        row.update(
            distance_km=report.distance_km,
            tau_ch=report.tau_ch,
            c0_sq=report.c0_sq,
            isi_power=report.isi_power,
            n_ex=report.n_ex,
            mutual_info=report.mutual_info_bits,
            holevo=report.holevo_bits,
            nu_plus=report.nu_plus,
            nu_minus=report.nu_minus,
            nu=report.nu,
            skr=report.skr_bits_per_symbol,
            kse=report.kse_bits_per_symbol,
        )
    row["status"] = status
    return row


def _optimize_point(spec: SweepSpec, rx, params, init: TapVector | None, baseline_skr: float):
    """Optimized report and taps; never raises, failures come back as status text."""
    try:
        trace = optimize(replace(spec.optimizer, init=init), rx, params)
        if init is not None and trace.final_report.skr_bits_per_symbol < baseline_skr:
            # warm start landed below the plain RRC start: retry from RRC
            cold = optimize(replace(spec.optimizer, init=None), rx, params)
            if cold.final_report.skr_bits_per_symbol > trace.final_report.skr_bits_per_symbol:
                trace = cold
        return trace.final_report, trace.final_taps, "ok"
    except (OptimizationError, ValueError, FloatingPointError) as exc:
        return None, None, f"failed: {exc}".replace("\n", " ")


def _series_task(args):
    spec, roll_off, n_bar, n_ch, distances = args
    rx = rrc_taps(roll_off, spec.sps, spec.rx_num_taps)
    tx = rrc_taps(roll_off, spec.sps, spec.tx_num_taps)
    plain = mode_overlap(tx, rx)
    rows = []
    init = None
    for d in distances:
        params = spec.link(d, roll_off, n_bar, n_ch)
        bound = replace(zero_mismatch_bound(params), distance_km=d)
        unopt = secret_key_rate(plain, params, distance_km=d)
        rows.append(_row("bound", roll_off, n_bar, n_ch, spec.beta, bound))
        rows.append(_row("unoptimized", roll_off, n_bar, n_ch, spec.beta, unopt))
        if spec.optimize:
            report, taps, status = _optimize_point(
                spec, rx, params, init if spec.warm_start else None, unopt.skr_bits_per_symbol
            )
            if report is not None:
                report = replace(report, distance_km=d)
                if spec.warm_start:
                    init = taps
            rows.append(_row("optimized", roll_off, n_bar, n_ch, spec.beta, report, status, d))
    return rows


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("QKD_PULSEOPT_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def _run_tasks(fn, tasks, threads):
    threads = min(resolve_threads(threads), len(tasks))
    if threads <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def sweep_distance(spec: SweepSpec, threads: int | None = 1) -> list[dict]:
    """Rows for the bound, plain truncated RRC and (optionally) optimized pulse at every
    (roll-off, n_bar, n_ch, distance) point, in input order.

    With ``warm_start`` each (roll-off, n_bar, n_ch) series runs sequentially over the
    distances, seeding each optimization with the previous optimum.
    """
    tasks = []
    for a in spec.roll_offs:
        for n_bar in spec.n_bars:
            for n_ch in spec.n_chs:
                if spec.warm_start:
                    tasks.append((spec, a, n_bar, n_ch, spec.distances_km))
                else:
                    tasks.extend((spec, a, n_bar, n_ch, (d,)) for d in spec.distances_km)
    rows = []
    for chunk in _run_tasks(_series_task, tasks, threads):
        rows.extend(chunk)
    return rows


def _kse_task(args):
    spec, roll_off, n_bar, n_ch, distance = args
    single = replace(spec, warm_start=False)
    rows = _series_task((single, roll_off, n_bar, n_ch, (distance,)))
    return rows[-1]


def sweep_kse_grid(spec: SweepSpec, distance_km: float, threads: int | None = 1) -> list[dict]:
    """KSE at every (roll-off, n_bar, n_ch) point at one distance, plus an ``argmax`` row.

    Uses the optimized pulse when ``spec.optimize`` is set, otherwise the plain RRC.
    """
    tasks = [
        (spec, a, n_bar, n_ch, float(distance_km))
        for a in spec.roll_offs
        for n_bar in spec.n_bars
        for n_ch in spec.n_chs
    ]
    rows = _run_tasks(_kse_task, tasks, threads)
    scored = [r for r in rows if np.isfinite(r["kse"])]
    if scored:
        best = max(scored, key=lambda r: r["kse"])
        rows.append(dict(best, variant="argmax"))
    return rows


def filter_response_report(filters, num_points: int | None = None):
    """Amplitude responses on a shared f*T axis.

    Returns ``(columns, rows)`` with columns ``fT`` and one dB column per filter.
    """
    filters = list(filters)
    if not filters:
        raise ValueError("need at least one filter")
    sps = {f.sps for f in filters}
    if len(sps) != 1:
        raise ValueError(f"filters have different sps values {sorted(sps)}")
    longest = max(len(f) for f in filters)
    if num_points is None:
        num_points = max(4096, longest)
    responses = [frequency_response(f, num_points) for f in filters]
    columns = ["fT"]
    for i, f in enumerate(filters):
        name = f.label or f"filter{i}"
        while name in columns:
            name = f"{name}_{i}"
        columns.append(name)
    freq = responses[0].normalized_frequency
    rows = [
        dict(zip(columns, [float(freq[k])] + [float(r.magnitude_db[k]) for r in responses]))
        for k in range(num_points)
    ]
    return columns, rows


def write_table(path, columns, rows) -> None:
    """CSV with a header row; floats are written in shortest round-trip form."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)
