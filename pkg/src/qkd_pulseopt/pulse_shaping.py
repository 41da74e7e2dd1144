"""Finite FIR pulse shapes: root-raised-cosine construction, normalization and
frequency-domain analysis.

Taps live on a sample grid with ``sps`` samples per symbol period ``T``; odd
filters are centre-aligned so tap ``k`` sits at ``t_k = (k - (n - 1) / 2) T / sps``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TapVector:
    """Real FIR taps with their sampling metadata.

    ``taps`` is stored as a read-only float64 array so instances can be shared
    between workers without defensive copies.
    """

    taps: np.ndarray
    sps: int
    label: str = ""
    roll_off: float | None = None

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64).reshape(-1)
        if taps.size < 1:
            raise ValueError("TapVector needs at least one tap")
        if not np.all(np.isfinite(taps)):
            raise ValueError("TapVector taps must be finite")
        if int(self.sps) != self.sps or self.sps < 1:
            raise ValueError(f"sps must be a positive integer, got {self.sps!r}")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "sps", int(self.sps))

    def __len__(self):
        return self.taps.size

    @property
    def energy(self) -> float:
        return float(np.dot(self.taps, self.taps))

    @property
    def center(self) -> int:
        return (self.taps.size - 1) // 2

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.energy - 1.0) <= tol

    def with_taps(self, taps, label: str | None = None) -> "TapVector":
        return TapVector(taps, self.sps, self.label if label is None else label, self.roll_off)

    def __eq__(self, other):
        if not isinstance(other, TapVector):
            return NotImplemented
        return (
            self.sps == other.sps
            and self.label == other.label
            and self.roll_off == other.roll_off
            and self.taps.shape == other.taps.shape
            and bool(np.all(self.taps == other.taps))
        )

    __hash__ = None


def rrc_impulse(t, roll_off: float) -> np.ndarray:
    """Unnormalized root-raised-cosine impulse response.

    ``t`` is time in symbol periods. The removable singularities at ``t = 0``
    and ``|t| = 1 / (4 roll_off)`` are replaced by their limits.
    """
    t = np.asarray(t, dtype=np.float64)
    a = float(roll_off)
    h = np.empty_like(t)

    at_zero = t == 0.0
    at_edge = np.zeros_like(at_zero)
    if a > 0:
        at_edge = np.isclose(np.abs(t), 1.0 / (4.0 * a), rtol=0.0, atol=1e-12)
    general = ~(at_zero | at_edge)

    x = t[general]
    num = np.sin(np.pi * x * (1 - a)) + 4 * a * x * np.cos(np.pi * x * (1 + a))
    den = np.pi * x * (1 - (4 * a * x) ** 2)
    h[general] = num / den
    h[at_zero] = 1 - a + 4 * a / np.pi
    if a > 0:
        h[at_edge] = a / np.sqrt(2) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * a))
            + (1 - 2 / np.pi) * np.cos(np.pi / (4 * a))
        )
    return h


def tap_times(num_taps: int, sps: int) -> np.ndarray:
    """Centre-aligned sample times in units of the symbol period."""
    return (np.arange(num_taps) - (num_taps - 1) / 2) / sps


def rrc_taps(roll_off: float, sps: int, num_taps: int) -> TapVector:
    """Unit-energy, centre-aligned root-raised-cosine filter.

    Examples
    --------
    >>> rrc_taps(0.1, 4, 1).taps.tolist()
    [1.0]
    """
    if not 0.0 <= roll_off <= 1.0:
        raise ValueError(f"roll_off must lie in [0, 1], got {roll_off}")
    if int(num_taps) != num_taps or num_taps < 1 or num_taps % 2 == 0:
        raise ValueError(f"num_taps must be a positive odd integer, got {num_taps}")
    if int(sps) != sps or sps < 1:
        raise ValueError(f"sps must be a positive integer, got {sps}")
    h = rrc_impulse(tap_times(int(num_taps), int(sps)), roll_off)
    # exact symmetry regardless of rounding in the time grid
    h = 0.5 * (h + h[::-1])
    label = f"rrc_a{roll_off:g}_sps{sps}_n{num_taps}"
    return normalize_energy(TapVector(h, sps, label, float(roll_off)))


def normalize_energy(filter: TapVector) -> TapVector:
    """Scale taps to unit energy. Raises ValueError for an all-zero filter."""
    energy = filter.energy
    if energy <= 0.0:
        raise ValueError("cannot normalize an all-zero tap vector")
    if energy == 1.0:
        return filter
    return filter.with_taps(filter.taps / np.sqrt(energy))


def truncation_energy_loss(roll_off: float, sps: int, num_taps: int) -> float:
    """Fraction of the pre-normalization energy lost by truncating to ``num_taps``,
    measured against a filter 20x longer."""
    long_n = 20 * num_taps + 1
    h_long = rrc_impulse(tap_times(long_n, sps), roll_off)
    offset = (long_n - num_taps) // 2
    kept = h_long[offset : offset + num_taps]
    return 1.0 - float(np.dot(kept, kept) / np.dot(h_long, h_long))


@dataclass(frozen=True)
class FrequencyResponse:
    """Amplitude response on a full DFT grid, axis in units of f*T."""

    normalized_frequency: np.ndarray
    magnitude_db: np.ndarray
    magnitude: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        if not (
            len(self.normalized_frequency) == len(self.magnitude_db) == len(self.magnitude)
        ):
            raise ValueError("frequency response sequences must have equal length")

    def bandwidth_3db(self) -> float:
        """Two-sided width (in f*T) of the contiguous region around DC within 3 dB
        of the response peak, with linear interpolation at the crossing."""
        f = self.normalized_frequency
        db = self.magnitude_db
        threshold = db.max() - 3.0
        pos = f >= 0
        fp, dbp = f[pos], db[pos]
        below = np.nonzero(dbp < threshold)[0]
        if below.size == 0:
            return 2.0 * float(fp[-1])
        k = int(below[0])
        if k == 0:
            return 0.0
        f0, f1, d0, d1 = fp[k - 1], fp[k], dbp[k - 1], dbp[k]
        edge = f0 + (threshold - d0) * (f1 - f0) / (d1 - d0)
        return 2.0 * float(edge)


_DB_FLOOR = 1e-300


def frequency_response(filter: TapVector, num_points: int) -> FrequencyResponse:
    """Zero-padded DFT magnitude of ``filter`` on ``num_points`` bins.

    The axis runs from ``-sps/2`` to just below ``sps/2`` (``fftshift`` order);
    bin zero of the unshifted DFT is the DC value ``|sum(taps)|``.
    """
    if num_points < len(filter):
        raise ValueError(
            f"num_points ({num_points}) must be at least the filter length ({len(filter)})"
        )
    spectrum = np.fft.fft(filter.taps, n=num_points)
    mag = np.fft.fftshift(np.abs(spectrum))
    freq = np.fft.fftshift(np.fft.fftfreq(num_points, d=1.0)) * filter.sps
    mag_db = 20.0 * np.log10(np.maximum(mag, _DB_FLOOR))
    return FrequencyResponse(freq, mag_db, mag, filter.label)
