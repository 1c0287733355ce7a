"""Two-channel selection and the extreme-value statistics behind it.

Each channel (left/right neuron) has its own heat bath.  A channel's tunnel
amplitude over a window is dominated by its largest spike, i.e. by the
deepest barrier narrowing ``max(-phi)``.  Amplitudes are square roots of the
integrand norm, so a narrowing ``x`` contributes ``exp(kappa*x)`` and a
selection margin ``a`` in length means an amplitude ratio ``exp(kappa*a)``.

Maxima of the (Gaussian) elongation over ``N`` effective drawings are
approximately Gumbel with scale ``sigma = sigma0 / sqrt(2 ln N)``.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from vatsim.constants import EULER_GAMMA
from vatsim.errors import ConfigurationError, EstimationError
from vatsim.parallel import pmap
from vatsim.phonon_bath import (
    LatticeSpec,
    analytic_sigma0,
    build_mode_grid,
    elongation_trace,
    rms_frequency,
    sample_coherent_amplitudes,
    steps_for,
)
from vatsim.seeding import derive_seed, rng_for
from vatsim.tunneling import (
    BarrierSpec,
    log_integrand_norm,
    log_static_prefactor,
    log_time_factor,
    log_vacuum_prefactor,
)

CORRELATION_POLICIES = ("rms", "debye")
PREFACTORS = ("vacuum", "coherent", "none")


@dataclass(frozen=True)
class GumbelParams:
    """Location ``mu`` and scale ``sigma`` (both m) of a Gumbel law for maxima.

    ``n_drawings`` is the effective sample count the scale was derived from;
    it is ``None`` for parameters fitted directly from data.
    """

    mu: float
    sigma: float
    n_drawings: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigurationError(f"Gumbel scale must be positive, got {self.sigma!r}")
        if self.n_drawings is not None and not self.n_drawings >= 2:
            raise ConfigurationError(f"need at least 2 drawings, got {self.n_drawings!r}")

    @classmethod
    def from_sigma0(cls, sigma0: float, n_drawings: float, mu: float | None = None) -> "GumbelParams":
        """Scale from the parent standard deviation; ``mu`` defaults to the
        classical normal-extremes location
        ``sigma0 * (b - (ln ln N + ln 4 pi) / (2 b))`` with ``b = sqrt(2 ln N)``."""
        if not n_drawings >= 2:
            raise ConfigurationError(f"need at least 2 drawings, got {n_drawings!r}")
        b = math.sqrt(2 * math.log(n_drawings))
        if mu is None:
            mu = sigma0 * (b - (math.log(math.log(n_drawings)) + math.log(4 * math.pi)) / (2 * b))
        return cls(mu, sigma0 / b, n_drawings)


def gumbel_cdf(x, params: GumbelParams):
    z = (np.asarray(x, dtype=float) - params.mu) / params.sigma
    out = np.exp(-np.exp(-z))
    return float(out) if out.ndim == 0 else out


def correlation_time(spec: LatticeSpec, policy: str = "rms") -> float:
    """Decorrelation time between successive maxima of the elongation.

    ``"rms"``: ``2 pi / omega_rms`` with the variance-weighted RMS frequency,
    the Rice rate of mean-level upcrossings.  ``"debye"``: the Debye period.
    """
    if policy == "rms":
        return 2 * math.pi / rms_frequency(spec)
    if policy == "debye":
        return spec.debye_period
    raise ConfigurationError(f"unknown correlation policy {policy!r}; expected one of {CORRELATION_POLICIES}")


def effective_drawings(spec: LatticeSpec, duration: float, policy: str = "rms") -> float:
    return duration / correlation_time(spec, policy)


def gumbel_for_window(spec: LatticeSpec, duration: float, policy: str = "rms") -> GumbelParams:
    return GumbelParams.from_sigma0(analytic_sigma0(spec), effective_drawings(spec, duration, policy))


def decision_probability(a: float, sigma: float) -> float:
    """Probability that two i.i.d. Gumbel maxima differ by at least ``a``.

    ``1 - tanh(a/(2 sigma))``, computed as ``2 e^-s / (1 + e^-s)`` with
    ``s = a/sigma`` so the tail does not cancel to zero.
    """
    if a < 0 or not sigma > 0:
        raise ValueError("need a >= 0 and sigma > 0")
    e = math.exp(-a / sigma)
    return 2.0 * e / (1.0 + e)


def decision_probability_quadrature(a: float, sigma: float) -> float:
    """Same probability by quadrature, ``int_0^1 x^(e^s) + 1 - x^(e^-s) dx``, ``s = a/sigma``."""
    s = a / sigma
    up, down = math.exp(s), math.exp(-s)
    value, _ = integrate.quad(lambda x: x**up + 1.0 - x**down, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    return value


def born_probability(alpha_abs: float, beta_abs: float, kappa: float, sigma: float) -> float:
    """Probability that the alpha channel's peak amplitude is the larger one.

    ``1 / (1 + |beta/alpha|^(1/(kappa*sigma)))``, evaluated as a logistic in
    log space so extreme ratios and large ``kappa*sigma`` stay finite.
    """
    if alpha_abs < 0 or beta_abs < 0:
        raise ValueError("amplitudes must be non-negative")
    if not kappa * sigma > 0:
        raise ValueError("kappa*sigma must be positive")
    if alpha_abs == 0 and beta_abs == 0:
        raise ValueError("at least one amplitude must be non-zero")
    if alpha_abs == 0:
        return 0.0
    if beta_abs == 0:
        return 1.0
    x = (math.log(beta_abs) - math.log(alpha_abs)) / (kappa * sigma)
    if x >= 0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def sample_gumbel(params: GumbelParams, size, rng: np.random.Generator) -> np.ndarray:
    return rng.gumbel(params.mu, params.sigma, size)


def decision_probability_mc(a: float, sigma: float, pairs: int, seed=0) -> float:
    """Fraction of independent Gumbel pairs whose maxima differ by ``>= a``."""
    x = sample_gumbel(GumbelParams(0.0, sigma), (2, pairs), rng_for(seed))
    return float(np.mean(np.abs(x[0] - x[1]) >= a))


def born_probability_mc(alpha_abs: float, beta_abs: float, kappa: float, sigma: float,
                        pairs: int, seed=0) -> float:
    """Fraction of pairs with ``ln|alpha| + kappa*x1 > ln|beta| + kappa*x2``."""
    x = sample_gumbel(GumbelParams(0.0, sigma), (2, pairs), rng_for(seed))
    return float(np.mean(math.log(alpha_abs) + kappa * x[0] > math.log(beta_abs) + kappa * x[1]))


def gumbel_width_ratio(N1: float, N2: float) -> float:
    """``sigma(N1)/sigma(N2)`` at fixed parent width: ``sqrt(ln N1 / ln N2)``."""
    if not (N1 >= 2 and N2 >= 2):
        raise ValueError("drawing counts must be >= 2")
    return math.sqrt(math.log(N1) / math.log(N2))


def fit_gumbel(samples: Sequence[float], n_drawings: float | None = None) -> GumbelParams:
    """Method-of-moments fit: ``sigma = sqrt(6) s / pi``, ``mu = mean - gamma sigma``."""
    x = np.asarray(samples, dtype=float)
    if x.size < 30:
        raise EstimationError(f"need at least 30 samples for a Gumbel fit, got {x.size}")
    std = float(np.std(x, ddof=1))
    if not std > 0:
        raise EstimationError("samples have zero variance")
    sigma = math.sqrt(6.0) * std / math.pi
    return GumbelParams(float(np.mean(x)) - EULER_GAMMA * sigma, sigma, n_drawings)


class Winner(enum.Enum):
    LEFT = "L"
    RIGHT = "R"
    AMBIGUOUS = "-"


@dataclass(frozen=True)
class SelectionOutcome:
    """One left/right experiment.

    ``log_amp_*`` are natural logs of the channels' peak tunnel amplitudes
    (half the log integrand norm).  ``phi_min_*`` are the elongation minima
    that produced them.
    """

    log_amp_left: float
    log_amp_right: float
    margin: float
    decided: bool
    winner: Winner
    threshold: float
    phi_min_left: float = float("nan")
    phi_min_right: float = float("nan")


def decide(log_amp_left: float, log_amp_right: float, threshold: float, **extra) -> SelectionOutcome:
    if not threshold > 0:
        raise ValueError(f"selection threshold must be positive, got {threshold!r}")
    margin = abs(log_amp_left - log_amp_right)
    decided = margin >= threshold
    if not decided:
        winner = Winner.AMBIGUOUS
    else:
        winner = Winner.LEFT if log_amp_left > log_amp_right else Winner.RIGHT
    return SelectionOutcome(log_amp_left, log_amp_right, margin, decided, winner, threshold, **extra)


def channel_prefactor(bath, barrier: BarrierSpec, prefactor: str) -> float:
    if prefactor == "vacuum":
        return log_vacuum_prefactor(bath.spec, barrier.kappa)
    if prefactor == "coherent":
        return log_static_prefactor(bath, barrier.kappa)
    if prefactor == "none":
        return 0.0
    raise ConfigurationError(f"unknown prefactor {prefactor!r}; expected one of {PREFACTORS}")


def channel_peak(seed, spec: LatticeSpec, barrier: BarrierSpec, duration: float,
                 dt: float | None = None, prefactor: str = "vacuum") -> tuple[float, float]:
    """Simulate one channel; return (log peak amplitude, elongation minimum)."""
    dt = spec.default_dt() if dt is None else dt
    bath = sample_coherent_amplitudes(build_mode_grid(spec), seed=seed)
    trace = elongation_trace(bath, 0.0, dt, steps_for(duration, dt))
    norm = log_integrand_norm(log_time_factor(trace, barrier.kappa), barrier,
                              channel_prefactor(bath, barrier, prefactor))
    return 0.5 * float(np.max(norm.values)), float(np.min(trace.values))


def run_selection(bath_left_seed, bath_right_seed, spec: LatticeSpec, barrier: BarrierSpec,
                  duration: float, margin_a: float, dt: float | None = None,
                  prefactor: str = "vacuum") -> SelectionOutcome:
    """One two-channel experiment with independent baths.

    Decided when the peak amplitudes differ by at least ``exp(kappa*margin_a)``.
    """
    left, phi_l = channel_peak(bath_left_seed, spec, barrier, duration, dt, prefactor)
    right, phi_r = channel_peak(bath_right_seed, spec, barrier, duration, dt, prefactor)
    return decide(left, right, barrier.kappa * margin_a, phi_min_left=phi_l, phi_min_right=phi_r)


def _selection_trial(trial: int, master_seed: int, spec, barrier, duration, margin_a, dt, prefactor, tag):
    return run_selection(derive_seed(master_seed, tag, trial, "L"), derive_seed(master_seed, tag, trial, "R"),
                         spec, barrier, duration, margin_a, dt, prefactor)


def run_selection_ensemble(spec: LatticeSpec, barrier: BarrierSpec, duration: float, margin_a: float,
                           trials: int, master_seed: int, dt: float | None = None,
                           prefactor: str = "vacuum", workers: int | None = None,
                           tag: str = "selection") -> list[SelectionOutcome]:
    fn = functools.partial(_selection_trial, master_seed=master_seed, spec=spec, barrier=barrier,
                           duration=duration, margin_a=margin_a, dt=dt, prefactor=prefactor, tag=tag)
    return pmap(fn, range(trials), workers)


def _window_maximum(trial: int, master_seed: int, spec, duration, dt, tag):
    bath = sample_coherent_amplitudes(build_mode_grid(spec), seed=derive_seed(master_seed, tag, trial))
    return float(np.max(elongation_trace(bath, 0.0, dt, steps_for(duration, dt)).values))


def window_maxima(spec: LatticeSpec, duration: float, trials: int, master_seed: int,
                  dt: float | None = None, workers: int | None = None, tag: str = "gumbel") -> np.ndarray:
    """Maximum elongation over ``[0, duration]`` for ``trials`` independent baths."""
    dt = spec.default_dt() if dt is None else dt
    fn = functools.partial(_window_maximum, master_seed=master_seed, spec=spec, duration=duration, dt=dt, tag=tag)
    return np.array(pmap(fn, range(trials), workers))


def ks_distance(samples, params: GumbelParams) -> float:
    """Two-sided Kolmogorov-Smirnov distance between samples and a Gumbel CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    cdf = gumbel_cdf(x, params)
    hi = np.arange(1, n + 1) / n - cdf
    lo = cdf - np.arange(n) / n
    return float(max(hi.max(), lo.max()))
