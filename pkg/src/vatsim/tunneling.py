"""Tunnel-integrand size from an elongation trace, spikes and contact events.

Everything here is kept in the log domain.  With kappa around 14/Angstrom
and elongations around an Angstrom, the linear factor ``exp(-2*kappa*phi)``
spans dozens of decades within a nanosecond.

The wavefunction normalization is fixed by setting
``|C|^2 * integral exp(-2 kappa x) dx = 1``, so all amplitudes are relative to
the bare under-barrier tail.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from vatsim.constants import HBAR
from vatsim.errors import ConfigurationError
from vatsim.phonon_bath import CoherentBath, LatticeSpec, Trace, TraceKind, build_mode_grid


def derive_kappa(M: float, V0: float) -> float:
    """Under-barrier decay constant ``sqrt(2*M*V0)/hbar`` in 1/m."""
    if not M > 0:
        raise ValueError(f"mass must be positive, got {M!r}")
    if V0 < 0:
        raise ValueError(f"barrier height must be >= 0, got {V0!r}")
    return math.sqrt(2 * M * V0) / HBAR


@dataclass(frozen=True)
class BarrierSpec:
    """Rectangular barrier: configurational mass, height and mean width (SI)."""

    M: float
    V0: float
    d0: float = 0.0
    kappa: float = float("nan")

    def __post_init__(self):
        if not (math.isfinite(self.M) and self.M > 0):
            raise ConfigurationError(f"configurational mass must be positive, got {self.M!r}")
        if not (math.isfinite(self.V0) and self.V0 >= 0):
            raise ConfigurationError(f"barrier height must be >= 0, got {self.V0!r}")
        if not (math.isfinite(self.d0) and self.d0 >= 0):
            raise ConfigurationError(f"mean barrier width must be >= 0, got {self.d0!r}")
        kappa = derive_kappa(self.M, self.V0)
        if not math.isnan(self.kappa) and self.kappa != kappa:
            raise ConfigurationError(f"kappa {self.kappa!r} inconsistent with M, V0 (expected {kappa!r})")
        object.__setattr__(self, "kappa", kappa)


@dataclass(frozen=True)
class PeakRecord:
    t_peak: float
    phi_min: float
    log_amplitude: float
    width_estimate: float
    index: int = -1


@dataclass(frozen=True)
class ContactEvent:
    t_start: float
    t_end: float

    @property
    def tau(self) -> float:
        return self.t_end - self.t_start


def log_time_factor(trace: Trace, kappa: float) -> Trace:
    """``log exp(-2*kappa*phi(t))``, i.e. ``-2*kappa*phi`` sample by sample."""
    if trace.kind is not TraceKind.ELONGATION:
        raise ValueError("log_time_factor expects an elongation trace")
    return Trace(trace.t0, trace.dt, -2.0 * kappa * trace.values, TraceKind.LOG_AMPLITUDE)


def coherent_overlap(bath: CoherentBath) -> float:
    """``<f, omega^-1 f> = sum |f_nl|^2 / omega_nl`` in seconds."""
    return float(np.sum(np.abs(bath.f) ** 2 / bath.omega))


def log_static_prefactor(bath: CoherentBath, kappa: float) -> float:
    """Bath-dependent static exponent ``2 kappa^2 <f, omega^-1 f>``.

    ``<f, omega^-1 f>`` is scaled by ``hbar/(2 m N L)``, the per-mode length
    scale of the elongation operator, which makes the exponent dimensionless.
    Zero for the empty bath.  See :func:`log_vacuum_prefactor` for the exact
    coherent-state moment, which does not depend on ``f``.
    """
    spec = bath.spec
    scale = HBAR / (2 * spec.m * spec.N * spec.L)
    return 2.0 * kappa**2 * scale * coherent_overlap(bath)


def vacuum_variance(spec: LatticeSpec) -> float:
    """Zero-point variance of the site elongation, ``hbar/(2mNL) sum 1/omega`` (m^2)."""
    omega = build_mode_grid(spec).omega
    return HBAR / (2 * spec.m * spec.N * spec.L) * float(np.sum(1.0 / omega))


def log_vacuum_prefactor(spec: LatticeSpec, kappa: float) -> float:
    """Static exponent of ``<f| exp(-2 kappa Phi) |f>`` for a displaced vacuum.

    For ``Phi = sum_j c_j (a_j + a_j^dagger)`` the coherent-state moment is
    ``exp(2 kappa^2 sum c_j^2) * exp(-2 kappa phi_bar)``, and
    ``sum c_j^2`` is the vacuum variance.
    """
    return 2.0 * kappa**2 * vacuum_variance(spec)


def log_integrand_norm(trace_log: Trace, barrier: BarrierSpec, log_prefactor: float = 0.0) -> Trace:
    """Full log of the squared integrand norm: width, normalization, bath terms."""
    if trace_log.kind is not TraceKind.LOG_AMPLITUDE:
        raise ValueError("log_integrand_norm expects a log-amplitude trace")
    offset = -2.0 * barrier.kappa * barrier.d0 + log_prefactor
    return Trace(trace_log.t0, trace_log.dt, offset + trace_log.values, TraceKind.LOG_AMPLITUDE)


def _crossing(v, i, j, level):
    """Fractional index where ``v`` crosses ``level`` between samples i and j."""
    return i + (level - v[i]) / (v[j] - v[i]) * (j - i)


def detect_peaks(trace_log: Trace, min_separation: float, kappa: float | None = None,
                 log_offset: float = 0.0) -> list[PeakRecord]:
    """Greedy peak picking on a log trace.

    Candidates are interior local maxima (the left edge of a plateau counts
    once; endpoints never do).  They are accepted in descending height,
    skipping any within ``min_separation`` of an already accepted peak.
    Width is the full width at ``height - 1`` (a factor e below the peak),
    linearly interpolated and clipped to the trace.

    ``log_offset`` is subtracted to get the time-dependent factor; with
    ``kappa`` given, ``phi_min = -log_amplitude / (2 kappa)``.
    Peaks are returned in time order.
    """
    v = trace_log.values
    if len(v) < 3:
        return []
    if min_separation < trace_log.dt:
        raise ValueError("min_separation must be at least one sample")
    inner = v[1:-1]
    cand = np.flatnonzero((inner > v[:-2]) & (inner >= v[2:])) + 1
    if cand.size == 0:
        return []
    order = cand[np.argsort(-v[cand], kind="stable")]
    radius = min_separation / trace_log.dt
    taken: list[int] = []
    for i in order:
        k = bisect.bisect_left(taken, i)
        if k > 0 and i - taken[k - 1] < radius:
            continue
        if k < len(taken) and taken[k] - i < radius:
            continue
        taken.insert(k, int(i))

    last = len(v) - 1
    peaks = []
    for i in taken:
        level = v[i] - 1.0
        lo = i
        while lo > 0 and v[lo - 1] >= level:
            lo -= 1
        left = _crossing(v, lo, lo - 1, level) if lo > 0 else 0.0
        hi = i
        while hi < last and v[hi + 1] >= level:
            hi += 1
        right = _crossing(v, hi, hi + 1, level) if hi < last else float(last)
        log_amp = float(v[i] - log_offset)
        phi = -log_amp / (2 * kappa) if kappa else float("nan")
        peaks.append(PeakRecord(trace_log.t0 + i * trace_log.dt, phi, log_amp,
                                (right - left) * trace_log.dt, i))
    return peaks


def contact_events(trace: Trace, d0: float) -> list[ContactEvent]:
    """Complete intervals where the width ``d0 + phi(t)`` is negative.

    Crossing times are linearly interpolated.  Intervals still open at either
    end of the trace are dropped, since their duration is unknown.
    """
    if trace.kind is not TraceKind.ELONGATION:
        raise ValueError("contact_events expects an elongation trace")
    w = d0 + trace.values
    neg = w < 0
    edges = np.flatnonzero(np.diff(neg.astype(np.int8)))
    events = []
    starts = [e for e in edges if not neg[e]]
    ends = [e for e in edges if neg[e]]
    for s in starts:
        k = bisect.bisect_right(ends, s)
        if k == len(ends):
            break
        e = ends[k]
        t_start = trace.t0 + _crossing(w, s, s + 1, 0.0) * trace.dt
        t_end = trace.t0 + _crossing(w, e, e + 1, 0.0) * trace.dt
        events.append(ContactEvent(t_start, t_end))
    return events


def contact_integral_estimate(V0: float, omega_D: float) -> float:
    """Order of the evolution integral during a contact event, ``V0/(hbar*omega_D)``."""
    if V0 < 0 or not omega_D > 0:
        raise ValueError("need V0 >= 0 and omega_D > 0")
    return V0 / (HBAR * omega_D)
