"""Symbol-level simulation of the pulse-shaped link, used as an empirical check
on the analytic excess-noise model.

The simulated chain is: Gaussian symbols -> upsample and shape with the Tx taps
-> amplitude scaling by ``sqrt(tau_ch)`` -> white complex Gaussian noise per
sample -> correlate with the Rx taps -> sample once per symbol.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .mode_overlap import mode_overlap
from .pulse_shaping import TapVector
from .security_rate import LinkParams


@dataclass(frozen=True)
class SimConfig:
    num_symbols: int
    seed: int
    tx: TapVector
    rx: TapVector
    params: LinkParams

    def __post_init__(self):
        if self.num_symbols < 1:
            raise ValueError(f"num_symbols must be >= 1, got {self.num_symbols}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.tx.sps != self.rx.sps:
            raise ValueError(f"sps mismatch: tx has {self.tx.sps}, rx has {self.rx.sps}")


@dataclass(frozen=True)
class SimReport:
    """Per-symbol streams and their second-order statistics.

    ``received = signal + noise``; statistics use only ``sent[core]``.
    """

    sent: np.ndarray
    received: np.ndarray
    signal: np.ndarray
    noise: np.ndarray
    core: slice
    gain: float
    isi_variance: float
    noise_variance: float
    total_noise_variance: float


def edge_symbols(tx: TapVector, rx: TapVector) -> int:
    """Symbols dropped at each end of the stream before computing statistics."""
    sps = rx.sps
    return max(math.ceil(len(rx) / sps), math.ceil((len(tx) + len(rx)) / (2 * sps)))


def complex_gaussian(rng: np.random.Generator, size: int, variance: float) -> np.ndarray:
    """Circularly symmetric samples with ``E|z|**2 = variance``."""
    z = rng.standard_normal((2, size))
    return math.sqrt(variance / 2.0) * (z[0] + 1j * z[1])


def transmit(symbols, tx: TapVector, rx: TapVector, tau_ch: float, noise=None) -> np.ndarray:
    """Matched-filter outputs for ``symbols``; linear in ``symbols`` for fixed ``noise``.

    ``noise`` is added to the shaped waveform sample by sample and must have
    length ``len(symbols) * sps + len(tx) - 1`` when given.
    """
    if tx.sps != rx.sps:
        raise ValueError("tx and rx must share sps")
    symbols = np.asarray(symbols, dtype=np.complex128)
    sps = tx.sps
    up = np.zeros(symbols.size * sps, dtype=np.complex128)
    up[::sps] = symbols
    wave = math.sqrt(tau_ch) * np.convolve(up, tx.taps)
    if noise is not None:
        noise = np.asarray(noise)
        if noise.shape != wave.shape:
            raise ValueError(f"noise must have shape {wave.shape}, got {noise.shape}")
        wave = wave + noise
    # full[i] = sum_n wave[n + i - (len_rx - 1)] rx[n]; symbol j sits at i = j*sps + ct + cr
    full = np.correlate(wave, rx.taps, mode="full")
    start = tx.center + rx.center
    return full[start : start + symbols.size * sps : sps]


def simulate_transmission(config: SimConfig) -> SimReport:
    tx, rx, p = config.tx, config.rx, config.params
    edge = edge_symbols(tx, rx)
    if config.num_symbols <= 2 * edge:
        raise ValueError(
            f"num_symbols={config.num_symbols} too small: need more than {2 * edge} "
            "to exclude edge symbols"
        )
    rng = np.random.default_rng(config.seed)
    sent = complex_gaussian(rng, config.num_symbols, p.n_bar)
    num_samples = config.num_symbols * tx.sps + len(tx) - 1
    # per-sample variance n_ch gives output variance n_ch after a unit-energy rx filter
    noise_in = complex_gaussian(rng, num_samples, p.n_ch) / math.sqrt(rx.energy)

    signal = transmit(sent, tx, rx, p.tau_ch)
    noise = transmit(np.zeros_like(sent), tx, rx, p.tau_ch, noise=noise_in)
    received = signal + noise

    core = slice(edge, config.num_symbols - edge)
    a = sent[core]
    gain_c = np.vdot(a, received[core]) / np.vdot(a, a)
    gain = float(gain_c.real)
    isi = signal[core] - gain * a
    resid = received[core] - gain * a
    return SimReport(
        sent=sent,
        received=received,
        signal=signal,
        noise=noise,
        core=core,
        gain=gain,
        isi_variance=float(np.mean(np.abs(isi) ** 2)),
        noise_variance=float(np.mean(np.abs(noise[core]) ** 2)),
        total_noise_variance=float(np.mean(np.abs(resid) ** 2)),
    )


@dataclass(frozen=True)
class NoiseValidation:
    analytic_isi_variance: float
    empirical_isi_variance: float
    analytic_gain: float
    empirical_gain: float
    analytic_noise_variance: float
    empirical_noise_variance: float
    rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.rel_error <= self.tolerance


def validate_excess_noise(config: SimConfig, tolerance: float = 0.05) -> NoiseValidation:
    """Compare simulated ISI variance with ``tau_ch * n_bar * sum_{j!=0} c_j**2``."""
    report = simulate_transmission(config)
    overlap = mode_overlap(config.tx, config.rx)
    p = config.params
    analytic = p.tau_ch * p.n_bar * overlap.isi_power
    if analytic > 0:
        rel = abs(report.isi_variance - analytic) / analytic
    else:
        rel = abs(report.isi_variance)
    return NoiseValidation(
        analytic_isi_variance=analytic,
        empirical_isi_variance=report.isi_variance,
        analytic_gain=math.sqrt(p.tau_ch) * overlap.c0,
        empirical_gain=report.gain,
        analytic_noise_variance=p.n_ch,
        empirical_noise_variance=report.noise_variance,
        rel_error=rel,
        tolerance=tolerance,
    )


def write_symbols_csv(report: SimReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sent_re", "sent_im", "received_re", "received_im"])
        for s, r in zip(report.sent, report.received):
            writer.writerow([repr(float(v)) for v in (s.real, s.imag, r.real, r.imag)])
