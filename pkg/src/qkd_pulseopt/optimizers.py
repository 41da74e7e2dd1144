"""Transmit-pulse optimization under a unit-energy constraint.

Two searches over the Tx taps share one objective (the raw secret key rate):

* :func:`optimize_reinforce` -- score-function policy gradient with an isotropic
  Gaussian policy over tap vectors and a moving-average reward baseline.
* :func:`optimize_gradient` -- projected ascent on central finite differences
  with step halving.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .mode_overlap import mode_overlap, overlap_operator
from .pulse_shaping import TapVector, normalize_energy, rrc_taps
from .security_rate import LinkParams, SkrReport, secret_key_rate, skr_from_powers

logger = logging.getLogger(__name__)

# Score given to an all-zero candidate instead of raising, so sampling never aborts.
DEGENERATE_SKR = -1e6

METHODS = ("reinforce", "gradient")

TRACE_CSV_COLUMNS = ("iteration", "best_skr", "mean_skr", "sigma")


class OptimizationError(RuntimeError):
    def __init__(self, message: str, trace: "OptimizationTrace | None" = None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class ReinforceSettings:
    population: int = 64
    sigma_init: float = 0.01
    sigma_decay: float = 0.999
    baseline_momentum: float = 0.9
    step_size: float = 1.0
    tolerance: float = 1e-10

    def __post_init__(self):
        if int(self.population) != self.population or self.population < 1:
            raise ValueError("population must be a positive integer")
        if not self.sigma_init > 0:
            raise ValueError("sigma_init must be > 0")
        if not 0 < self.sigma_decay <= 1:
            raise ValueError("sigma_decay must lie in (0, 1]")
        if not 0 <= self.baseline_momentum < 1:
            raise ValueError("baseline_momentum must lie in [0, 1)")
        if not self.step_size > 0:
            raise ValueError("step_size must be > 0")
        if not self.tolerance >= 0:
            raise ValueError("tolerance must be >= 0")


@dataclass(frozen=True)
class GradientSettings:
    step_size: float = 0.05
    fd_epsilon: float = 1e-6
    tolerance: float = 1e-6
    max_halvings: int = 40

    def __post_init__(self):
        for name in ("step_size", "fd_epsilon", "tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_halvings < 1:
            raise ValueError("max_halvings must be >= 1")


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "reinforce"
    num_taps: int = 13
    max_iterations: int = 5000
    seed: int = 0
    init: TapVector | None = None
    reinforce: ReinforceSettings = field(default_factory=ReinforceSettings)
    gradient: GradientSettings = field(default_factory=GradientSettings)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if int(self.num_taps) != self.num_taps or self.num_taps < 1 or self.num_taps % 2 == 0:
            raise ValueError(f"num_taps must be a positive odd integer, got {self.num_taps}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.init is not None and len(self.init) != self.num_taps:
            raise ValueError(
                f"init has {len(self.init)} taps but num_taps is {self.num_taps}"
            )


@dataclass
class OptimizationTrace:
    method: str
    iteration: list[int]
    best_skr: list[float]
    mean_skr: list[float]
    sigma: list[float]
    final_taps: TapVector
    final_report: SkrReport
    converged: bool
    status: str

    @property
    def iterations(self):
        return list(zip(self.iteration, self.best_skr, self.mean_skr))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_CSV_COLUMNS)
            for row in zip(self.iteration, self.best_skr, self.mean_skr, self.sigma):
                writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def canonical_sign(taps: np.ndarray) -> np.ndarray:
    """Flip the global sign so the centre tap is nonnegative."""
    taps = np.asarray(taps, dtype=np.float64)
    return -taps if taps[(taps.size - 1) // 2] < 0 else taps


def objective(taps, rx: TapVector, params: LinkParams) -> float:
    """Raw secret key rate of the unit-energy version of ``taps`` against ``rx``.

    An all-zero vector scores :data:`DEGENERATE_SKR`.
    """
    taps = np.asarray(taps, dtype=np.float64)
    energy = float(np.dot(taps, taps))
    if not energy > 0 or not math.isfinite(energy):
        return DEGENERATE_SKR
    tx = TapVector(taps / math.sqrt(energy), rx.sps)
    return secret_key_rate(mode_overlap(tx, rx), params).skr_bits_per_symbol


class TapObjective:
    """Batched form of :func:`objective` for a fixed receiver and tap count."""

    def __init__(self, num_taps: int, rx: TapVector, params: LinkParams):
        self.num_taps = num_taps
        self.rx = rx
        self.params = params
        lags, self._W = overlap_operator(num_taps, rx)
        self._zero = int(np.nonzero(lags == 0)[0][0])
        self._off = lags != 0

    def batch(self, taps: np.ndarray) -> np.ndarray:
        taps = np.atleast_2d(np.asarray(taps, dtype=np.float64))
        energy = np.einsum("ij,ij->i", taps, taps)
        ok = (energy > 0) & np.isfinite(energy)
        out = np.full(taps.shape[0], DEGENERATE_SKR)
        if ok.any():
            c_sq = (taps[ok] @ self._W.T) ** 2 / energy[ok, None]
            c0_sq = c_sq[:, self._zero]
            isi = c_sq[:, self._off].sum(axis=1)
            out[ok] = skr_from_powers(c0_sq, isi, self.params)[0]
        return out

    def __call__(self, taps) -> float:
        return float(self.batch(taps)[0])


def central_difference_gradient(f: Callable, x, eps: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = eps
        grad[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return grad


def five_point_gradient(f: Callable, x, eps: float) -> np.ndarray:
    """Fourth-order central stencil; used as a reference for the 3-point one."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = eps
        grad[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * eps)
    return grad


def default_init(num_taps: int, rx: TapVector) -> TapVector:
    if rx.roll_off is None:
        raise ValueError("rx has no roll_off; pass an explicit init TapVector")
    return rrc_taps(rx.roll_off, rx.sps, num_taps)


def _start(config: OptimizerConfig, rx: TapVector) -> np.ndarray:
    init = config.init if config.init is not None else default_init(config.num_taps, rx)
    if init.sps != rx.sps:
        raise ValueError("init and rx must share sps")
    return canonical_sign(normalize_energy(init).taps).copy()


def _finish(method, rx, params, best_taps, hist, converged, status) -> OptimizationTrace:
    taps = canonical_sign(best_taps / np.linalg.norm(best_taps))
    final = TapVector(taps, rx.sps, f"optimized_{method}_n{taps.size}", rx.roll_off)
    report = secret_key_rate(mode_overlap(final, rx), params)
    return OptimizationTrace(
        method=method,
        iteration=hist[0],
        best_skr=hist[1],
        mean_skr=hist[2],
        sigma=hist[3],
        final_taps=final,
        final_report=report,
        converged=converged,
        status=status,
    )


def optimize_reinforce(
    config: OptimizerConfig, rx: TapVector, params: LinkParams
) -> OptimizationTrace:
    """Gaussian-policy REINFORCE over unit-energy tap vectors.

    Each iteration samples ``population`` candidates ``mu + sigma * eps``, scores
    them, and moves ``mu`` along ``mean((R - b) * eps) / sigma`` where ``b`` is an
    exponential moving average of past mean rewards. ``mu`` is projected back to
    unit energy after every update and ``sigma`` decays geometrically. Stops early
    when the best score has not improved by ``tolerance`` over the last 20% of
    ``max_iterations``.
    """
    s = config.reinforce
    obj = TapObjective(config.num_taps, rx, params)
    rng = np.random.default_rng(config.seed)

    mu = _start(config, rx)
    best_taps = mu.copy()
    best = obj(mu)
    sigma = s.sigma_init
    baseline = None
    window = max(1, int(0.2 * config.max_iterations))
    hist = ([], [], [], [])
    converged, status = False, "max_iterations"

    for it in range(config.max_iterations):
        eps = rng.standard_normal((s.population, mu.size))
        rewards = obj.batch(mu + sigma * eps)
        mean_r = float(rewards.mean())
        if baseline is None:
            baseline = mean_r
        spread = float(rewards.std())
        if spread > 0:
            # score-function estimate (R - b) eps / sigma with rate step * sigma**2 / spread
            advantage = (rewards - baseline) / spread
            mu = mu + s.step_size * sigma * (advantage @ eps) / s.population
            mu = mu / np.linalg.norm(mu)
        baseline = s.baseline_momentum * baseline + (1 - s.baseline_momentum) * mean_r

        k = int(np.argmax(rewards))
        mu_score = obj(mu)
        if rewards[k] > max(best, mu_score):
            best, best_taps = float(rewards[k]), mu + sigma * eps[k]
        elif mu_score > best:
            best, best_taps = mu_score, mu.copy()

        hist[0].append(it)
        hist[1].append(best)
        hist[2].append(mean_r)
        hist[3].append(sigma)
        sigma *= s.sigma_decay

        if it >= window and best - hist[1][it - window] <= s.tolerance:
            converged, status = True, "stalled"
            break

    logger.debug("reinforce finished after %d iterations: best=%r", len(hist[0]), best)
    return _finish("reinforce", rx, params, best_taps, hist, converged, status)


def optimize_gradient(
    config: OptimizerConfig,
    rx: TapVector,
    params: LinkParams,
    objective_fn: Callable[[np.ndarray], np.ndarray] | None = None,
) -> OptimizationTrace:
    """Projected gradient ascent with central finite differences.

    A step that lowers the objective (or makes it non-finite) is rejected and
    the step size halved; an accepted step grows it by 1.5x. Terminates when the
    tangential gradient norm drops below ``tolerance``.

    ``objective_fn`` swaps in another batched objective (one candidate per
    row) on the same unit sphere, for test harnesses with a known optimum.
    """
    s = config.gradient
    if objective_fn is None:
        objective_fn = TapObjective(config.num_taps, rx, params).batch

    def f(x):
        return float(objective_fn(x[None, :])[0])

    def grad_of(x):
        n = x.size
        steps = np.eye(n) * s.fd_epsilon
        vals = objective_fn(np.vstack([x + steps, x - steps]))
        return (vals[:n] - vals[n:]) / (2 * s.fd_epsilon)

    x = _start(config, rx)
    fx = f(x)
    step = s.step_size
    hist = ([], [], [], [])

    def record(it):
        hist[0].append(it)
        hist[1].append(fx)
        hist[2].append(fx)
        hist[3].append(step)

    for it in range(config.max_iterations):
        grad = grad_of(x)
        grad = grad - np.dot(grad, x) * x
        gnorm = float(np.linalg.norm(grad))
        if gnorm < s.tolerance:
            record(it)
            return _finish("gradient", rx, params, x, hist, True, "gradient_tolerance")
        for _ in range(s.max_halvings):
            cand = x + step * grad
            cand = cand / np.linalg.norm(cand)
            fc = f(cand)
            if math.isfinite(fc) and fc >= fx:
                x, fx = cand, fc
                step *= 1.5
                break
            step *= 0.5
        else:
            record(it)
            trace = _finish("gradient", rx, params, x, hist, False, "line_search_failed")
            if math.isfinite(fx) and step * gnorm < 1e-14:
                # no ascent step above rounding resolution: numerically at the optimum
                trace.converged, trace.status = True, "step_underflow"
                return trace
            raise OptimizationError("line search failed to find an ascent step", trace)
        record(it)

    return _finish("gradient", rx, params, x, hist, False, "max_iterations")


def optimize(config: OptimizerConfig, rx: TapVector, params: LinkParams) -> OptimizationTrace:
    if config.method == "reinforce":
        return optimize_reinforce(config, rx, params)
    return optimize_gradient(config, rx, params)


def with_init(config: OptimizerConfig, init: TapVector | None) -> OptimizerConfig:
    return replace(config, init=init)
