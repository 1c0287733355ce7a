"""Several observers: collective amplitudes from independent baths.

With ``n`` observers the integrand norm of one channel factorizes into a
product over observers, each integrated over its own time variable.  The
time-dependent part is ``exp(-2 kappa sum_j phi_j(t_j))``, so the dominant
contribution comes from the sum of each observer's own elongation minimum.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from vatsim.errors import ConfigurationError
from vatsim.parallel import pmap
from vatsim.phonon_bath import LatticeSpec, build_mode_grid, elongation_trace, sample_coherent_amplitudes, steps_for
from vatsim.seeding import derive_seed
from vatsim.selection import SelectionOutcome, channel_prefactor, decide
from vatsim.tunneling import BarrierSpec

THRESHOLD_SCALINGS = ("fixed", "linear")


@dataclass(frozen=True)
class ObserverEnsemble:
    """One channel's baths: one seed per observer."""

    seeds: tuple
    spec: LatticeSpec
    barrier: BarrierSpec
    duration: float
    dt: float | None = None
    channel: str = "L"

    def __post_init__(self):
        seeds = tuple(self.seeds)
        object.__setattr__(self, "seeds", seeds)
        if not seeds:
            raise ConfigurationError("an ensemble needs at least one observer")
        keys = [_seed_key(s) for s in seeds]
        if len(set(keys)) != len(keys):
            raise ConfigurationError("observer seeds must be distinct")
        if not self.duration > 0:
            raise ConfigurationError("duration must be positive")

    @property
    def n_observers(self) -> int:
        return len(self.seeds)

    @classmethod
    def derived(cls, master_seed: int, n: int, spec, barrier, duration, *, trial: int = 0,
                channel: str = "L", dt=None, tag: str = "ensemble") -> "ObserverEnsemble":
        seeds = tuple(derive_seed(master_seed, tag, trial, channel, j) for j in range(n))
        return cls(seeds, spec, barrier, duration, dt, channel)


def _seed_key(seed):
    if isinstance(seed, np.random.SeedSequence):
        return (seed.entropy, tuple(seed.spawn_key))
    return seed


@dataclass(frozen=True)
class EnsembleStats:
    """``log_collective_amplitude = -2 kappa * sum_extrema`` (time-dependent
    factor of the squared norm).  Width, normalization and bath prefactors of
    all observers are summed into ``log_static_terms``."""

    per_observer_extrema: tuple[float, ...]
    sum_extrema: float
    log_collective_amplitude: float
    log_static_terms: float = 0.0
    channel: str = "L"


def observer_minimum(seed, spec: LatticeSpec, duration: float, dt: float | None = None,
                     barrier: BarrierSpec | None = None, prefactor: str = "vacuum") -> tuple[float, float]:
    """One observer's elongation minimum over ``[0, duration]`` (endpoints
    included) and its static log term."""
    dt = spec.default_dt() if dt is None else dt
    bath = sample_coherent_amplitudes(build_mode_grid(spec), seed=seed)
    phi = float(np.min(elongation_trace(bath, 0.0, dt, steps_for(duration, dt)).values))
    static = 0.0
    if barrier is not None:
        static = -2.0 * barrier.kappa * barrier.d0 + channel_prefactor(bath, barrier, prefactor)
    return phi, static


def collective_log_amplitude(ensemble: ObserverEnsemble, channel: str | None = None,
                             prefactor: str = "vacuum", workers: int | None = 1) -> EnsembleStats:
    fn = functools.partial(observer_minimum, spec=ensemble.spec, duration=ensemble.duration,
                           dt=ensemble.dt, barrier=ensemble.barrier, prefactor=prefactor)
    results = pmap(fn, ensemble.seeds, workers)
    extrema = tuple(r[0] for r in results)
    total = math.fsum(extrema)  # correctly rounded, so independent of observer order
    return EnsembleStats(extrema, total, -2.0 * ensemble.barrier.kappa * total,
                         math.fsum(r[1] for r in results), channel or ensemble.channel)


def collective_selection(ensemble_left: ObserverEnsemble, ensemble_right: ObserverEnsemble,
                         margin_a: float, threshold_scaling: str = "fixed",
                         prefactor: str = "vacuum", workers: int | None = 1) -> SelectionOutcome:
    """Left/right decision from two collective amplitudes.

    Channel log amplitude is half the collective log norm, static terms
    included.  ``threshold_scaling="fixed"`` keeps the single-observer
    threshold ``kappa*a``; ``"linear"`` uses ``n*kappa*a``.
    """
    n = ensemble_left.n_observers
    if ensemble_right.n_observers != n:
        raise ConfigurationError(f"observer counts differ: {n} vs {ensemble_right.n_observers}")
    if threshold_scaling not in THRESHOLD_SCALINGS:
        raise ConfigurationError(f"unknown threshold scaling {threshold_scaling!r}")
    left = collective_log_amplitude(ensemble_left, "L", prefactor, workers)
    right = collective_log_amplitude(ensemble_right, "R", prefactor, workers)
    kappa = ensemble_left.barrier.kappa
    threshold = kappa * margin_a * (n if threshold_scaling == "linear" else 1)
    return decide(0.5 * (left.log_collective_amplitude + left.log_static_terms),
                  0.5 * (right.log_collective_amplitude + right.log_static_terms),
                  threshold, phi_min_left=left.sum_extrema, phi_min_right=right.sum_extrema)


def _sum_extrema_trial(trial: int, n: int, master_seed: int, spec, duration, dt, tag, channel="L"):
    return math.fsum(observer_minimum(derive_seed(master_seed, f"{tag}/n={n}", trial, channel, j),
                                      spec, duration, dt)[0] for j in range(n))


def summed_extrema(spec: LatticeSpec, duration: float, n: int, trials: int, master_seed: int,
                   dt: float | None = None, workers: int | None = None, tag: str = "ensemble",
                   channel: str = "L") -> np.ndarray:
    """``trials`` independent draws of ``sum_j min_t phi_j(t)`` for ``n`` observers."""
    fn = functools.partial(_sum_extrema_trial, n=n, master_seed=master_seed, spec=spec,
                           duration=duration, dt=dt, tag=tag, channel=channel)
    return np.array(pmap(fn, range(trials), workers))


def sqrt_n_scaling_check(spec: LatticeSpec, barrier: BarrierSpec, duration: float,
                         n_values: Sequence[int], trials: int, master_seed: int = 0,
                         dt: float | None = None, workers: int | None = None) -> list[tuple[int, float]]:
    """Empirical standard deviation of summed extrema for each ``n``.

    ``barrier`` does not enter the extrema; it is accepted so the call
    mirrors the ensemble configuration.
    """
    if trials < 100:
        raise ConfigurationError(f"need at least 100 trials per n, got {trials}")
    rows = []
    for n in n_values:
        sums = summed_extrema(spec, duration, int(n), trials, master_seed, dt, workers)
        rows.append((int(n), float(np.std(sums, ddof=1))))
    return rows


def scaling_ratios(rows: Sequence[tuple[int, float]]) -> list[tuple[int, float, float]]:
    """``(n, stddev, stddev / stddev(n=1))``; requires an ``n = 1`` row."""
    base = dict(rows).get(1)
    if base is None:
        raise ConfigurationError("scaling table needs an n = 1 row")
    return [(n, s, s / base) for n, s in rows]
