"""Experiment orchestration behind the ``vat-sim`` command.

Each experiment maps a :class:`RunConfig` to named tables and a list of
summary scalars.  ``run`` writes them atomically: all files are produced in
a scratch directory and moved into place only when the experiment succeeds.
"""

from __future__ import annotations

import functools
import logging
import math
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from vatsim.config import RunConfig, dump_config
from vatsim.constants import ANGSTROM
from vatsim.observers import ObserverEnsemble, collective_selection
from vatsim.output import Scalar, Table, summary_text, table_to_csv
from vatsim.parallel import pmap
from vatsim.phonon_bath import (
    analytic_sigma0,
    build_mode_grid,
    elongation_trace,
    rms_frequency,
    sample_coherent_amplitudes,
    steps_for,
)
from vatsim.seeding import derive_seed
from vatsim.selection import (
    GumbelParams,
    born_probability,
    born_probability_mc,
    channel_prefactor,
    correlation_time,
    decision_probability,
    decision_probability_mc,
    decision_probability_quadrature,
    effective_drawings,
    fit_gumbel,
    gumbel_for_window,
    gumbel_width_ratio,
    ks_distance,
    run_selection_ensemble,
    window_maxima,
    Winner,
)
from vatsim.tunneling import (
    contact_events,
    contact_integral_estimate,
    detect_peaks,
    log_integrand_norm,
    log_time_factor,
)

log = logging.getLogger(__name__)

KAPPA = "kappa = sqrt(2*M*V0)/hbar"
SIGMA0 = "sigma0^2 = sum_modes k_B*T/(m*N*L*omega^2)"
NEFF = "N_eff = duration/tau_c"
SIGMA = "sigma = sigma0/sqrt(2*ln(N_eff))"
DECISION = "P_decided = 1 - tanh(a/(2*sigma))"
BORN = "P_alpha = 1/(1 + |beta/alpha|^(1/(kappa*sigma)))"
RATIO = "sigma(N1)/sigma(N2) = sqrt(ln N1/ln N2)"
CONTACT = "V0*tau/hbar ~ V0/(hbar*omega_D)"


@dataclass
class ExperimentResult:
    tables: dict[str, Table] = field(default_factory=dict)
    scalars: list[Scalar] = field(default_factory=list)

    def add(self, name, value, unit, formula):
        self.scalars.append(Scalar(name, value, unit, formula))


def _common_scalars(res: ExperimentResult, cfg: RunConfig):
    spec, barrier = cfg.lattice(), cfg.barrier()
    res.add("kappa", barrier.kappa, "1/m", KAPPA)
    res.add("sigma0", analytic_sigma0(spec), "m", SIGMA0)
    res.add("dt", cfg.dt, "s", "dt = 2*pi/(omega_D*samples_per_cycle)")
    res.add("steps", steps_for(cfg.duration, cfg.dt), "1", "steps = round(duration/dt)")


def _bath(cfg: RunConfig, tag: str, trial: int = 0):
    return sample_coherent_amplitudes(build_mode_grid(cfg.lattice()), seed=derive_seed(cfg.master_seed, tag, trial),
                                      trigger_site=cfg.trigger_site)


def exp_trace(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    _common_scalars(res, cfg)
    trace = elongation_trace(_bath(cfg, "trace"), 0.0, cfg.dt, steps_for(cfg.duration, cfg.dt))
    res.tables["trace"] = Table(["t", "elongation"], ["s", "m"], list(zip(trace.times.tolist(), trace.values.tolist())))
    res.add("sample_std", float(np.std(trace.values)), "m", "sqrt(mean((phi - mean(phi))^2))")
    res.add("min_elongation", float(trace.values.min()), "m", "min_t phi(t)")
    res.add("max_elongation", float(trace.values.max()), "m", "max_t phi(t)")
    res.add("rms_frequency", rms_frequency(cfg.lattice()), "rad/s", "omega_rms = sqrt((N*L-1)/sum omega^-2)")
    return res


def exp_amplitude_trace(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    _common_scalars(res, cfg)
    barrier = cfg.barrier()
    bath = _bath(cfg, "amplitude-trace")
    trace = elongation_trace(bath, 0.0, cfg.dt, steps_for(cfg.duration, cfg.dt))
    factor = log_time_factor(trace, barrier.kappa)
    prefactor = channel_prefactor(bath, barrier, cfg.prefactor)
    norm = log_integrand_norm(factor, barrier, prefactor)
    res.tables["amplitude_trace"] = Table(
        ["t", "elongation", "log_time_factor", "log_integrand_norm"], ["s", "m", "1", "1"],
        list(zip(trace.times.tolist(), trace.values.tolist(), factor.values.tolist(), norm.values.tolist())))

    offset = norm.values[0] - factor.values[0]
    peaks = detect_peaks(norm, trace.dt * cfg.samples_per_cycle, barrier.kappa, log_offset=offset)
    res.tables["peaks"] = Table(["t_peak", "phi_min", "log_amplitude", "width"], ["s", "m", "1", "s"],
                                [(p.t_peak, p.phi_min, p.log_amplitude, p.width_estimate) for p in peaks])
    events = contact_events(trace, barrier.d0)
    res.tables["contacts"] = Table(["t_start", "t_end", "tau"], ["s", "s", "s"],
                                   [(e.t_start, e.t_end, e.tau) for e in events])

    heights = sorted((p.log_amplitude for p in peaks), reverse=True)
    res.add("log_prefactor", prefactor, "1", f"static exponent ({cfg.prefactor})")
    res.add("log_norm_max_minus_median", float(norm.values.max() - np.median(norm.values)), "1",
            "max_t log|I|^2 - median_t log|I|^2")
    res.add("n_peaks", len(peaks), "1", "greedy local maxima, separation one Debye period")
    if len(heights) >= 2:
        res.add("peak_dominance", heights[0] - heights[1], "1", "log height(top) - log height(runner-up)")
    res.add("n_contacts", len(events), "1", "intervals with d0 + phi(t) < 0")
    if events:
        res.add("mean_contact_tau", float(np.mean([e.tau for e in events])), "s", "mean tau over contacts")
    return res


def exp_selection(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    _common_scalars(res, cfg)
    spec, barrier = cfg.lattice(), cfg.barrier()
    outcomes = run_selection_ensemble(spec, barrier, cfg.duration, cfg.margin, cfg.trials, cfg.master_seed,
                                      cfg.dt, cfg.prefactor)
    res.tables["selection"] = Table(
        ["trial", "log_amp_left", "log_amp_right", "margin", "decided", "winner", "phi_min_left", "phi_min_right"],
        ["1", "1", "1", "1", "1", "1", "m", "m"],
        [(i, o.log_amp_left, o.log_amp_right, o.margin, o.decided, o.winner.value, o.phi_min_left, o.phi_min_right)
         for i, o in enumerate(outcomes)])

    decided = [o for o in outcomes if o.decided]
    res.add("decided_fraction", len(decided) / len(outcomes), "1", "count(margin >= kappa*a)/trials")
    if decided:
        left = sum(o.winner is Winner.LEFT for o in decided)
        res.add("left_fraction", left / len(decided), "1", "count(L)/count(decided)")
        res.add("right_fraction", 1 - left / len(decided), "1", "count(R)/count(decided)")
    theory = gumbel_for_window(spec, cfg.duration, cfg.correlation)
    res.add("n_eff", theory.n_drawings, "1", f"{NEFF}, tau_c ({cfg.correlation})")
    res.add("sigma_theory", theory.sigma, "m", SIGMA)
    res.add("p_decided_theory", decision_probability(cfg.margin, theory.sigma), "1", DECISION)
    if len(outcomes) >= 15:
        narrowing = [-o.phi_min_left for o in outcomes] + [-o.phi_min_right for o in outcomes]
        fit = fit_gumbel(narrowing)
        res.add("sigma_empirical", fit.sigma, "m", "sqrt(6)*std(max(-phi))/pi")
        res.add("p_decided_empirical_sigma", decision_probability(cfg.margin, fit.sigma), "1", DECISION)
    return res


def exp_born_mc(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    kappa = cfg.barrier().kappa
    rows = []
    for i, r in enumerate(cfg.margin_ratios):
        seed = derive_seed(cfg.master_seed, "decision-mc", i)
        rows.append((r, decision_probability_mc(r, 1.0, cfg.mc_pairs, seed), decision_probability(r, 1.0),
                     decision_probability_quadrature(r, 1.0)))
    res.tables["decision"] = Table(["a_over_sigma", "p_mc", "p_formula", "p_quadrature"], ["1"] * 4, rows)
    rows = []
    for i, ks in enumerate(cfg.kappa_sigma_values):
        sigma = ks / kappa
        for j, ratio in enumerate(cfg.amplitude_ratios):
            seed = derive_seed(cfg.master_seed, "born-mc", i, observer=j)
            rows.append((ks, ratio, born_probability_mc(1.0, ratio, kappa, sigma, cfg.mc_pairs, seed),
                         born_probability(1.0, ratio, kappa, sigma)))
    res.tables["born"] = Table(["kappa_sigma", "beta_over_alpha", "p_mc", "p_formula"], ["1"] * 4, rows)
    res.add("kappa", kappa, "1/m", KAPPA)
    res.add("mc_pairs", cfg.mc_pairs, "1", "Gumbel pairs per Monte Carlo point")
    worst_d = max(abs(r[1] - r[2]) for r in res.tables["decision"].rows)
    worst_b = max(abs(r[2] - r[3]) for r in res.tables["born"].rows)
    res.add("max_abs_error_decision", worst_d, "1", f"max |MC - ({DECISION})|")
    res.add("max_abs_error_born", worst_b, "1", f"max |MC - ({BORN})|")
    return res


def _collective_trial(trial, n, cfg: RunConfig):
    spec, barrier = cfg.lattice(), cfg.barrier()
    tag = f"ensemble/n={n}"
    left = ObserverEnsemble.derived(cfg.master_seed, n, spec, barrier, cfg.duration, trial=trial, channel="L",
                                    dt=cfg.dt, tag=tag)
    right = ObserverEnsemble.derived(cfg.master_seed, n, spec, barrier, cfg.duration, trial=trial, channel="R",
                                     dt=cfg.dt, tag=tag)
    return collective_selection(left, right, cfg.margin, cfg.threshold_scaling, cfg.prefactor)


def exp_ensemble(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    _common_scalars(res, cfg)
    per_trial, scaling = [], []
    base = None
    for n in cfg.observers:
        outcomes = pmap(functools.partial(_collective_trial, n=n, cfg=cfg), range(cfg.trials))
        sums = np.array([o.phi_min_left for o in outcomes])
        std = float(np.std(sums, ddof=1)) if len(sums) > 1 else 0.0
        if n == 1:
            base = std
        ambiguous = sum(o.winner is Winner.AMBIGUOUS for o in outcomes) / len(outcomes)
        scaling.append([n, std, math.sqrt(n), ambiguous])
        per_trial += [(n, i, o.phi_min_left, o.phi_min_right, o.winner.value) for i, o in enumerate(outcomes)]
    for row in scaling:
        row.insert(2, row[1] / base if base else float("nan"))
    res.tables["ensemble"] = Table(["n", "trial", "sum_extrema_left", "sum_extrema_right", "winner"],
                                   ["1", "1", "m", "m", "1"], per_trial)
    res.tables["scaling"] = Table(["n", "stddev", "ratio", "sqrt_n", "ambiguous_fraction"],
                                  ["1", "m", "1", "1", "1"], [tuple(r) for r in scaling])
    for n, std, ratio, _, amb in res.tables["scaling"].rows:
        res.add(f"stddev_ratio_n{n}", ratio, "1", "std(sum_j min phi_j; n)/std(n=1) ~ sqrt(n)")
        res.add(f"ambiguous_fraction_n{n}", amb, "1", f"threshold {cfg.threshold_scaling}")
    return res


def exp_gumbel_fit(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    _common_scalars(res, cfg)
    spec = cfg.lattice()
    maxima = window_maxima(spec, cfg.duration, cfg.trials, cfg.master_seed, cfg.dt)
    res.tables["maxima"] = Table(["trial", "phi_max"], ["1", "m"], list(enumerate(maxima.tolist())))
    for policy in ("rms", "debye"):
        theory = gumbel_for_window(spec, cfg.duration, policy)
        mu = float(np.mean(maxima)) - 0.5772156649 * theory.sigma
        res.add(f"tau_c_{policy}", correlation_time(spec, policy), "s", f"tau_c = 2*pi/omega ({policy})")
        res.add(f"n_eff_{policy}", theory.n_drawings, "1", NEFF)
        res.add(f"sigma_{policy}", theory.sigma, "m", SIGMA)
        res.add(f"mu_fit_{policy}", mu, "m", "mu = mean(max phi) - gamma*sigma")
        if len(maxima) >= 2:
            res.add(f"ks_{policy}", ks_distance(maxima, GumbelParams(mu, theory.sigma)), "1",
                    "sup |F_emp - exp(-exp(-(x-mu)/sigma))|")
    if len(maxima) >= 30:
        fit = fit_gumbel(maxima)
        res.add("mu_moments", fit.mu, "m", "mu = mean - gamma*sigma")
        res.add("sigma_moments", fit.sigma, "m", "sigma = sqrt(6)*std/pi")
    return res


def exp_estimates(cfg: RunConfig) -> ExperimentResult:
    res = ExperimentResult()
    spec, barrier = cfg.lattice(), cfg.barrier()
    theory = gumbel_for_window(spec, cfg.duration, cfg.correlation)
    res.add("kappa", barrier.kappa, "1/m", KAPPA)
    res.add("kappa_per_angstrom", barrier.kappa * ANGSTROM, "1/Angstrom", KAPPA)
    res.add("contact_integral", contact_integral_estimate(barrier.V0, spec.omega_D), "1", CONTACT)
    res.add("width_ratio_1e4_1e11", gumbel_width_ratio(1e4, 1e11), "1", RATIO)
    res.add("sigma0", analytic_sigma0(spec), "m", SIGMA0)
    res.add("n_eff", theory.n_drawings, "1", f"{NEFF}, tau_c ({cfg.correlation})")
    res.add("n_eff_debye", effective_drawings(spec, cfg.duration, "debye"), "1", f"{NEFF}, tau_c = 2*pi/omega_D")
    res.add("sigma", theory.sigma, "m", SIGMA)
    res.add("kappa_sigma", barrier.kappa * theory.sigma, "1", "kappa*sigma")
    res.add("p_decided", decision_probability(cfg.margin, theory.sigma), "1", DECISION)
    res.add("p_born_ratio2", born_probability(1.0, 2.0, barrier.kappa, theory.sigma), "1", BORN + ", |beta/alpha| = 2")
    res.tables["estimates"] = Table(["quantity", "value", "unit", "formula"], ["-", "-", "-", "-"],
                                    [(s.name, s.value, s.unit, s.formula) for s in res.scalars])
    return res


EXPERIMENTS = {
    "trace": exp_trace,
    "amplitude-trace": exp_amplitude_trace,
    "selection": exp_selection,
    "born-mc": exp_born_mc,
    "ensemble": exp_ensemble,
    "gumbel-fit": exp_gumbel_fit,
    "estimates": exp_estimates,
}


def execute(cfg: RunConfig) -> ExperimentResult:
    return EXPERIMENTS[cfg.experiment](cfg)


def run(cfg: RunConfig, out_dir: str | Path | None = None) -> list[Path]:
    """Run ``cfg.experiment`` and write its artifacts; returns the written paths."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    result = execute(cfg)
    prefix = cfg.experiment.replace("-", "_")
    out.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=f".{prefix}-", dir=out))
    try:
        names = []
        for name, table in result.tables.items():
            path = scratch / f"{prefix}_{name}.csv"
            path.write_text(table_to_csv(table), encoding="utf-8")
            names.append(path.name)
        (scratch / f"{prefix}_summary.txt").write_text(
            summary_text(f"vat-sim {cfg.experiment} (master_seed = {cfg.master_seed})", result.scalars),
            encoding="utf-8")
        (scratch / f"{prefix}_config.txt").write_text(dump_config(cfg), encoding="utf-8")
        names += [f"{prefix}_summary.txt", f"{prefix}_config.txt"]
        written = []
        for name in names:
            target = out / name
            (scratch / name).replace(target)
            written.append(target)
        return written
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
