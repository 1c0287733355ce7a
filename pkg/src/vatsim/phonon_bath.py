"""Harmonic-membrane phonon bath in a thermal coherent state.

The bath is an N x L membrane with periodic boundaries and linear dispersion.
A microstate is a set of complex coherent amplitudes ``f`` (one per mode),
drawn with Boltzmann weight ``exp(-hbar*omega*|f|^2 / (k_B*T))``.  The
classical elongation at the trigger site is

    phi(t) = sqrt(2*hbar/(m*N*L)) * sum_j omega_j**-0.5 * Re(f_j exp(-i k_j.s0) exp(i omega_j t))

which we regroup into ``sum_j A_j cos(omega_j t + phase_j)`` with ``A_j`` in meters.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from vatsim.constants import HBAR, K_B
from vatsim.errors import ConfigurationError
from vatsim.seeding import rng_for

# Samples per synthesis block.  Each block is one complex GEMM row.
_BLOCK = 512


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry, material and thermal parameters of the membrane (SI units)."""

    N: int = 70
    L: int = 70
    m: float = 18 * 1.66054e-27
    a_lat: float = 3e-10
    c_S: float = 1500.0
    omega_D: float = 1.6e13
    temperature: float = 310.0

    def __post_init__(self):
        if int(self.N) != self.N or int(self.L) != self.L:
            raise ConfigurationError("lattice sizes must be integers")
        if self.N < 2 or self.L < 2:
            raise ConfigurationError(f"lattice must be at least 2x2, got {self.N}x{self.L}")
        for name in ("m", "a_lat", "c_S", "omega_D"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be positive and finite, got {value!r}")
        if not (math.isfinite(self.temperature) and self.temperature >= 0):
            raise ConfigurationError(f"temperature must be >= 0 K, got {self.temperature!r}")

    @property
    def debye_period(self) -> float:
        return 2 * math.pi / self.omega_D

    def default_dt(self, samples_per_cycle: int = 16) -> float:
        return self.debye_period / samples_per_cycle


class Mode(NamedTuple):
    n: int
    l: int
    omega: float
    kx: float
    ky: float
    f: complex = 0j


@dataclass(frozen=True, eq=False)
class ModeGrid(Sequence[Mode]):
    """All non-zero modes of a lattice, stored column-wise.

    Indexing or iterating yields :class:`Mode` records with ``f = 0``.
    ``group`` maps each mode to its frequency-degeneracy class; modes in one
    class share a bit-identical ``omega`` (``group_omega``).
    """

    spec: LatticeSpec
    n: np.ndarray
    l: np.ndarray
    omega: np.ndarray
    kx: np.ndarray
    ky: np.ndarray
    group: np.ndarray
    group_omega: np.ndarray

    def __len__(self) -> int:
        return len(self.omega)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return Mode(int(self.n[i]), int(self.l[i]), float(self.omega[i]),
                    float(self.kx[i]), float(self.ky[i]))

    def __iter__(self) -> Iterator[Mode]:
        for i in range(len(self)):
            yield self[i]


def _frozen(a) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@functools.lru_cache(maxsize=16)
def build_mode_grid(spec: LatticeSpec) -> ModeGrid:
    """Mode spectrum for ``n, l`` in the half-open zone ``-N/2 .. N/2-1``.

    The zero mode (rigid translation) is dropped, leaving ``N*L - 1`` modes.
    """
    N, L = spec.N, spec.L
    n, l = np.meshgrid(np.arange(N) - N // 2, np.arange(L) - L // 2, indexing="ij")
    n, l = n.ravel(), l.ravel()
    keep = (n != 0) | (l != 0)
    n, l = n[keep], l[keep]
    omega = spec.omega_D * np.sqrt(n**2 / N**2 + l**2 / L**2)
    kx = (spec.omega_D / spec.c_S) * (n / N)
    ky = (spec.omega_D / spec.c_S) * (l / L)
    # Integer degeneracy key; equal keys mean equal n^2/N^2 + l^2/L^2 exactly.
    key = n.astype(np.int64) ** 2 * L**2 + l.astype(np.int64) ** 2 * N**2
    _, first, group = np.unique(key, return_index=True, return_inverse=True)
    return ModeGrid(spec, _frozen(n), _frozen(l), _frozen(omega), _frozen(kx), _frozen(ky),
                    _frozen(group.ravel()), _frozen(omega[first]))


@dataclass(frozen=True, eq=False)
class CoherentBath:
    """One sampled bath microstate.

    ``f`` holds the complex coherent amplitude of every mode of ``grid``;
    ``amplitude``/``phase`` are the per-mode cosine amplitude (m) and phase
    (rad) at ``trigger_site``.
    """

    spec: LatticeSpec
    grid: ModeGrid
    f: np.ndarray
    trigger_site: tuple[float, float]
    amplitude: np.ndarray
    phase: np.ndarray

    @property
    def omega(self) -> np.ndarray:
        return self.grid.omega

    @property
    def modes(self) -> list[Mode]:
        g = self.grid
        return [Mode(int(g.n[i]), int(g.l[i]), float(g.omega[i]), float(g.kx[i]),
                     float(g.ky[i]), complex(self.f[i])) for i in range(len(g))]

    @property
    def reduced(self) -> list[tuple[float, float, float]]:
        return list(zip(self.amplitude.tolist(), self.phase.tolist(), self.omega.tolist()))

    def group_phasors(self) -> np.ndarray:
        """Complex amplitude per degeneracy class, ``sum A_j exp(i phase_j)``."""
        z = self.amplitude * np.exp(1j * self.phase)
        g = self.grid.group
        size = len(self.grid.group_omega)
        return np.bincount(g, weights=z.real, minlength=size) + 1j * np.bincount(g, weights=z.imag, minlength=size)


def elongation_prefactor(spec: LatticeSpec) -> float:
    """``sqrt(2*hbar/(m*N*L))`` in m * s**-0.5."""
    return math.sqrt(2 * HBAR / (spec.m * spec.N * spec.L))


def reduce_amplitudes(grid: ModeGrid, f: np.ndarray, trigger_site=(0.0, 0.0)):
    """Regroup complex amplitudes into ``(A_j, phase_j)`` at the trigger site.

    ``trigger_site`` is in lattice units; it is scaled by ``a_lat`` for k.s0.
    """
    spec = grid.spec
    sx, sy = trigger_site[0] * spec.a_lat, trigger_site[1] * spec.a_lat
    shifted = f * np.exp(-1j * (grid.kx * sx + grid.ky * sy))
    amplitude = elongation_prefactor(spec) * grid.omega**-0.5 * np.abs(shifted)
    phase = np.angle(shifted)
    return amplitude, phase


def sample_coherent_amplitudes(
    modes: ModeGrid | LatticeSpec,
    temperature: float | None = None,
    seed: int | np.random.SeedSequence = 0,
    trigger_site: tuple[float, float] = (0.0, 0.0),
) -> CoherentBath:
    """Draw a thermal coherent state.

    Each ``f_nl`` is circularly symmetric complex Gaussian with
    ``E|f_nl|^2 = k_B*T / (hbar*omega_nl)``.  Real and imaginary parts are
    drawn in one ``(2, n_modes)`` block from PCG64, so a seed fixes the bath
    bit for bit.  ``temperature`` defaults to the lattice's.
    """
    grid = modes if isinstance(modes, ModeGrid) else build_mode_grid(modes)
    spec = grid.spec
    if temperature is None:
        temperature = spec.temperature
    elif temperature != spec.temperature:
        spec = LatticeSpec(spec.N, spec.L, spec.m, spec.a_lat, spec.c_S, spec.omega_D, temperature)
    if temperature < 0:
        raise ConfigurationError(f"temperature must be >= 0 K, got {temperature!r}")

    z = rng_for(seed).standard_normal((2, len(grid)))
    scale = np.sqrt(K_B * temperature / (2 * HBAR * grid.omega))
    f = (z[0] + 1j * z[1]) * scale
    amplitude, phase = reduce_amplitudes(grid, f, trigger_site)
    return CoherentBath(spec, grid, _frozen(f), (float(trigger_site[0]), float(trigger_site[1])),
                        _frozen(amplitude), _frozen(phase))


class TraceKind(enum.Enum):
    ELONGATION = "elongation"
    LOG_AMPLITUDE = "log_amplitude"

    @property
    def unit(self) -> str:
        return "m" if self is TraceKind.ELONGATION else "1"


@dataclass(frozen=True, eq=False)
class Trace:
    t0: float
    dt: float
    values: np.ndarray = field(repr=False)
    kind: TraceKind = TraceKind.ELONGATION

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if values.ndim != 1 or values.size == 0:
            raise ValueError("trace values must be a non-empty 1-D array")
        if not np.all(np.isfinite(values)):
            raise ValueError("trace values must be finite")
        if values.flags.writeable:
            values = values.copy()
            values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    @property
    def duration(self) -> float:
        return self.dt * (len(self.values) - 1)


def synthesize(omega: np.ndarray, phasor: np.ndarray, t0: float, dt: float, steps: int) -> np.ndarray:
    """``Re sum_j phasor_j exp(i omega_j t)`` on ``t = t0 + i*dt``.

    Times are split as ``t0 + b*B*dt + k*dt``; the block phases and the
    in-block phases are exponentiated separately, so every sample is a single
    complex matrix product with no accumulated recurrence error.
    """
    blocks = -(-steps // _BLOCK)
    width = min(_BLOCK, steps)
    starts = t0 + np.arange(blocks) * (_BLOCK * dt)
    head = phasor[None, :] * np.exp(1j * np.outer(starts, omega))
    tail = _block_tail(np.ascontiguousarray(omega, dtype=float).tobytes(), float(dt), width)
    return (head @ tail).real.ravel()[:steps]


@functools.lru_cache(maxsize=8)
def _block_tail(omega_bytes: bytes, dt: float, width: int) -> np.ndarray:
    # same for every bath on a grid; dominates the cost of short traces
    omega = np.frombuffer(omega_bytes, dtype=float)
    tail = np.exp(1j * np.outer(omega, np.arange(width) * dt))
    tail.setflags(write=False)
    return tail


def elongation_trace(bath: CoherentBath, t0: float = 0.0, dt: float | None = None,
                     steps: int = 1) -> Trace:
    """Elongation at the trigger site on a uniform time grid."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if dt is None:
        dt = bath.spec.default_dt()
    values = synthesize(bath.grid.group_omega, bath.group_phasors(), t0, dt, int(steps))
    return Trace(t0, dt, values, TraceKind.ELONGATION)


def elongation_from_modes(bath: CoherentBath, times) -> np.ndarray:
    """Direct mode-by-mode evaluation from the complex amplitudes.

    O(modes * times); used to check the regrouped fast path.
    """
    grid = bath.grid
    sx, sy = bath.trigger_site[0] * bath.spec.a_lat, bath.trigger_site[1] * bath.spec.a_lat
    c = elongation_prefactor(bath.spec) * grid.omega**-0.5 * bath.f * np.exp(-1j * (grid.kx * sx + grid.ky * sy))
    times = np.atleast_1d(np.asarray(times, dtype=float))
    return np.array([np.sum((c * np.exp(1j * grid.omega * t)).real) for t in times])


def elongation_from_reduced(bath: CoherentBath, times) -> np.ndarray:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    return np.array([np.sum(bath.amplitude * np.cos(bath.omega * t + bath.phase)) for t in times])


def mode_variances(spec: LatticeSpec) -> np.ndarray:
    """Ensemble variance of each mode's contribution, ``k_B T/(m N L omega^2)``."""
    omega = build_mode_grid(spec).omega
    return K_B * spec.temperature / (spec.m * spec.N * spec.L * omega**2)


def analytic_sigma0(spec: LatticeSpec) -> float:
    """Stationary standard deviation of the trigger-site elongation, in m."""
    return math.sqrt(float(np.sum(mode_variances(spec))))


def rms_frequency(spec: LatticeSpec) -> float:
    """Variance-weighted RMS angular frequency of the elongation process.

    Independent of temperature: ``sqrt((NL-1) / sum omega^-2)``.  Rice's
    mean-level crossing rate is ``rms_frequency / pi``.
    """
    omega = build_mode_grid(spec).omega
    return math.sqrt(len(omega) / float(np.sum(omega**-2.0)))


def steps_for(duration: float, dt: float) -> int:
    return max(1, int(round(duration / dt)))
