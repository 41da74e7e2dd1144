"""Asymptotic key rate of Gaussian-modulated CV-QKD with mode-mismatch ISI.

All photon numbers are in photon-number units (vacuum = 0). Eve's information
is the Holevo term ``g(nu_plus) + g(nu_minus) - g(nu)``.

Conditional eigenvalue forms
----------------------------
Two forms of the Bob-conditioned eigenvalue ``nu`` are available:

``"printed"``
    ``(1 - tau + n_ex * n_bar) / (tau * n_bar + n_ex + 1)``
``"corrected"`` (default)
    ``(1 - tau + n_ex) * n_bar / (tau * n_bar + n_ex + 1)``

The corrected form is what the heterodyne conditional covariance
``V_A - C**2 / (V_B + 1)`` reduces to in photon units. The printed form agrees
with it at ``tau = 1, n_ex = 0`` but gives negative key rates on a noiseless
pure-loss link past a few km, so it is kept only for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mode_overlap import OverlapCoefficients

CONDITIONAL_FORMS = ("corrected", "printed")

_CLAMP = 1e-12

SKR_CSV_COLUMNS = (
    "distance_km",
    "tau_ch",
    "c0_sq",
    "isi_power",
    "n_ex",
    "mutual_info",
    "holevo",
    "nu_plus",
    "nu_minus",
    "nu",
    "skr",
    "kse",
)


@dataclass(frozen=True)
class LinkParams:
    n_bar: float
    tau_ch: float
    n_ch: float = 0.0
    beta: float = 0.95
    roll_off: float = 0.1
    conditional: str = "corrected"

    def __post_init__(self):
        for name in ("n_bar", "tau_ch", "n_ch", "beta", "roll_off"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ValueError(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.n_bar <= 0:
            raise ValueError(f"n_bar must be > 0, got {self.n_bar}")
        if not 0 < self.tau_ch <= 1:
            raise ValueError(f"tau_ch must lie in (0, 1], got {self.tau_ch}")
        if self.n_ch < 0:
            raise ValueError(f"n_ch must be >= 0, got {self.n_ch}")
        if not 0 <= self.beta <= 1:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if not 0 <= self.roll_off <= 1:
            raise ValueError(f"roll_off must lie in [0, 1], got {self.roll_off}")
        if self.conditional not in CONDITIONAL_FORMS:
            raise ValueError(
                f"conditional must be one of {CONDITIONAL_FORMS}, got {self.conditional!r}"
            )


@dataclass(frozen=True)
class SkrReport:
    tau_ch: float
    c0_sq: float
    isi_power: float
    n_ex: float
    tau: float
    mutual_info_bits: float
    holevo_bits: float
    nu_plus: float
    nu_minus: float
    nu: float
    skr_bits_per_symbol: float
    kse_bits_per_symbol: float
    distance_km: float | None = None

    def csv_row(self, clamp: bool = False) -> list[str]:
        skr, kse = self.skr_bits_per_symbol, self.kse_bits_per_symbol
        if clamp:
            skr, kse = max(skr, 0.0), max(kse, 0.0)
        values = [
            self.distance_km,
            self.tau_ch,
            self.c0_sq,
            self.isi_power,
            self.n_ex,
            self.mutual_info_bits,
            self.holevo_bits,
            self.nu_plus,
            self.nu_minus,
            self.nu,
            skr,
            kse,
        ]
        return ["" if v is None else repr(float(v)) for v in values]


def _clamp_nonneg(x, what: str):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < -_CLAMP):
        raise ValueError(f"{what} must be >= 0, got {x.min()!r}")
    return np.maximum(x, 0.0)


def g(x):
    """Bosonic entropy ``(x+1) log2(x+1) - x log2 x`` with ``g(0) = 0``.

    Accepts scalars or arrays; values in ``(-1e-12, 0)`` are treated as zero.

    >>> g(1.0)
    2.0
    """
    x = _clamp_nonneg(x, "g argument")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    # log2(x+1) + x log2(1 + 1/x); the log1p branch avoids cancellation at large x
    big = x >= 1
    small = (x > 0) & ~big
    tail = np.zeros_like(x)
    tail[big] = x[big] * np.log1p(1.0 / x[big]) / math.log(2.0)
    tail[small] = x[small] * (np.log2(x[small] + 1.0) - np.log2(x[small]))
    out = np.log2(x + 1.0) + tail
    return float(out[0]) if scalar else out


def channel_transmittance(distance_km: float, attenuation_db_per_km: float = 0.2) -> float:
    if distance_km < 0 or attenuation_db_per_km < 0:
        raise ValueError("distance and attenuation must be nonnegative")
    return 10.0 ** (-attenuation_db_per_km * distance_km / 10.0)


def key_spectral_efficiency(skr, roll_off: float):
    if not 0 <= roll_off <= 1:
        raise ValueError(f"roll_off must lie in [0, 1], got {roll_off}")
    return skr / (1.0 + roll_off)


def excess_noise(overlap: OverlapCoefficients, params: LinkParams) -> float:
    """Channel noise plus the ISI leaked from neighbouring symbols."""
    return params.n_ch + params.tau_ch * params.n_bar * overlap.isi_power


def conditional_eigenvalue(tau, n_bar, n_ex, form: str = "corrected"):
    if form == "corrected":
        return (1.0 - tau + n_ex) * n_bar / (tau * n_bar + n_ex + 1.0)
    if form == "printed":
        return (1.0 - tau + n_ex * n_bar) / (tau * n_bar + n_ex + 1.0)
    raise ValueError(f"unknown conditional eigenvalue form {form!r}")


def _eigenvalues(tau, n_bar, n_ex, form):
    a = (1.0 - tau) * n_bar
    root = np.sqrt((a + n_ex + 1.0) ** 2 + 4.0 * tau * n_bar * n_ex)
    nu_plus = 0.5 * (root + (a - n_ex) - 1.0)
    nu_minus = 0.5 * (root - (a - n_ex) - 1.0)
    nu = conditional_eigenvalue(tau, n_bar, n_ex, form)
    return (
        _clamp_nonneg(nu_plus, "nu_plus"),
        _clamp_nonneg(nu_minus, "nu_minus"),
        _clamp_nonneg(nu, "nu"),
    )


def symplectic_eigenvalues(tau: float, n_bar: float, n_ex: float, form: str = "corrected"):
    """Return ``(nu_plus, nu_minus, nu)`` for effective transmittance ``tau``."""
    if not 0 <= tau <= 1:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    if n_bar <= 0:
        raise ValueError(f"n_bar must be > 0, got {n_bar}")
    if n_ex < 0:
        raise ValueError(f"n_ex must be >= 0, got {n_ex}")
    return tuple(float(v) for v in _eigenvalues(tau, n_bar, n_ex, form))


def skr_from_powers(c0_sq, isi_power, params: LinkParams):
    """Vectorized key rate from ``c0**2`` and the ISI power; the raw value may be
    negative. Returns ``(skr, n_ex, tau, mutual_info, holevo, nu_plus, nu_minus, nu)``."""
    c0_sq = np.asarray(c0_sq, dtype=np.float64)
    isi_power = np.asarray(isi_power, dtype=np.float64)
    n_ex = params.n_ch + params.tau_ch * params.n_bar * isi_power
    tau = params.tau_ch * c0_sq
    mutual_info = np.log2(1.0 + tau * params.n_bar / (n_ex + 1.0))
    nu_plus, nu_minus, nu = _eigenvalues(tau, params.n_bar, n_ex, params.conditional)
    holevo = g(nu_plus) + g(nu_minus) - g(nu)
    skr = params.beta * mutual_info - holevo
    return skr, n_ex, tau, mutual_info, holevo, nu_plus, nu_minus, nu


def _report(c0_sq: float, isi_power: float, params: LinkParams, distance_km=None) -> SkrReport:
    skr, n_ex, tau, mi, holevo, nu_p, nu_m, nu = (
        float(v) for v in skr_from_powers(c0_sq, isi_power, params)
    )
    return SkrReport(
        tau_ch=params.tau_ch,
        c0_sq=float(c0_sq),
        isi_power=float(isi_power),
        n_ex=n_ex,
        tau=tau,
        mutual_info_bits=mi,
        holevo_bits=holevo,
        nu_plus=nu_p,
        nu_minus=nu_m,
        nu=nu,
        skr_bits_per_symbol=skr,
        kse_bits_per_symbol=skr / (1.0 + params.roll_off),
        distance_km=distance_km,
    )


def secret_key_rate(
    overlap: OverlapCoefficients, params: LinkParams, distance_km: float | None = None
) -> SkrReport:
    c0 = overlap.c0
    return _report(c0 * c0, overlap.isi_power, params, distance_km)


def zero_mismatch_bound(params: LinkParams, distance_km: float | None = None) -> SkrReport:
    """Key rate with a perfectly matched pulse (``c0 = 1``, no ISI)."""
    return _report(1.0, 0.0, params, distance_km)
