import math

import numpy as np
import pytest

from vatsim.constants import ANGSTROM
from vatsim.errors import ConfigurationError
from vatsim.observers import (
    ObserverEnsemble,
    collective_log_amplitude,
    collective_selection,
    scaling_ratios,
    sqrt_n_scaling_check,
    summed_extrema,
)
from vatsim.phonon_bath import LatticeSpec, elongation_trace, sample_coherent_amplitudes, steps_for
from vatsim.seeding import derive_seed
from vatsim.selection import Winner, decide, run_selection
from vatsim.tunneling import detect_peaks, log_time_factor

SHORT = 1e-10


def _ensemble(spec, barrier, n, trial=0, channel="L", duration=SHORT, tag="obs-test"):
    return ObserverEnsemble.derived(99, n, spec, barrier, duration, trial=trial, channel=channel, tag=tag)


class TestEnsembleConstruction:
    def test_distinct_seeds_required(self, default_spec, default_barrier):
        with pytest.raises(ConfigurationError):
            ObserverEnsemble((1, 2, 1), default_spec, default_barrier, SHORT)
        with pytest.raises(ConfigurationError):
            ObserverEnsemble((), default_spec, default_barrier, SHORT)
        s = derive_seed(1, "x", 0)
        with pytest.raises(ConfigurationError):
            ObserverEnsemble((s, derive_seed(1, "x", 0)), default_spec, default_barrier, SHORT)

    def test_derived_seeds(self, default_spec, default_barrier):
        e = _ensemble(default_spec, default_barrier, 5)
        assert e.n_observers == 5


class TestCollectiveAmplitude:
    def test_single_observer_reduces_to_peak(self, default_spec, default_barrier):
        k = default_barrier.kappa
        checked = 0
        for trial in range(10):
            ens = _ensemble(default_spec, default_barrier, 1, trial=trial)
            stats = collective_log_amplitude(ens)
            bath = sample_coherent_amplitudes(default_spec, seed=ens.seeds[0])
            tr = elongation_trace(bath, 0.0, default_spec.default_dt(), steps_for(SHORT, default_spec.default_dt()))
            i = int(np.argmin(tr.values))
            if i in (0, len(tr) - 1):
                continue  # endpoint minimum: not a peak by construction
            top = max(detect_peaks(log_time_factor(tr, k), default_spec.debye_period), key=lambda p: p.log_amplitude)
            assert stats.log_collective_amplitude == top.log_amplitude
            checked += 1
        assert checked >= 5

    def test_zero_temperature(self, default_barrier):
        cold = LatticeSpec(temperature=0.0)
        stats = collective_log_amplitude(_ensemble(cold, default_barrier, 3))
        assert stats.sum_extrema == 0.0 and stats.log_collective_amplitude == 0.0

    def test_sum_of_single_observers(self, default_spec, default_barrier):
        ens = _ensemble(default_spec, default_barrier, 6)
        stats = collective_log_amplitude(ens)
        singles = [collective_log_amplitude(ObserverEnsemble((s,), default_spec, default_barrier, SHORT))
                   for s in ens.seeds]
        assert stats.per_observer_extrema == tuple(x.sum_extrema for x in singles)
        assert stats.log_collective_amplitude == pytest.approx(sum(x.log_collective_amplitude for x in singles),
                                                               rel=1e-14)
        assert stats.log_static_terms == pytest.approx(sum(x.log_static_terms for x in singles), rel=1e-14)

    def test_permutation_invariant(self, default_spec, default_barrier):
        ens = _ensemble(default_spec, default_barrier, 7)
        perm = ObserverEnsemble(tuple(reversed(ens.seeds)), default_spec, default_barrier, SHORT)
        a, b = collective_log_amplitude(ens), collective_log_amplitude(perm)
        assert a.sum_extrema == b.sum_extrema
        assert sorted(a.per_observer_extrema) == sorted(b.per_observer_extrema)

    @pytest.mark.slow
    def test_mean_linear_in_n(self, default_spec):
        means = {n: np.mean(summed_extrema(default_spec, SHORT, n, 200, master_seed=4)) for n in (1, 4, 16)}
        for n in (4, 16):
            assert means[n] / n == pytest.approx(means[1], rel=0.05)

    @pytest.mark.slow
    def test_two_observer_convolution(self, default_spec):
        from scipy import stats
        pairs = summed_extrema(default_spec, SHORT, 2, 500, master_seed=5)
        singles = summed_extrema(default_spec, SHORT, 1, 1000, master_seed=6)
        i, j = np.triu_indices(len(singles), k=1)
        reference = singles[i] + singles[j]
        assert stats.ks_2samp(pairs, reference).statistic <= 0.08


class TestCollectiveSelection:
    def test_single_observer_matches_run_selection(self, default_spec, default_barrier):
        for trial in range(4):
            left = _ensemble(default_spec, default_barrier, 1, trial, "L")
            right = _ensemble(default_spec, default_barrier, 1, trial, "R")
            a = collective_selection(left, right, 0.3 * ANGSTROM)
            b = run_selection(left.seeds[0], right.seeds[0], default_spec, default_barrier, SHORT, 0.3 * ANGSTROM)
            assert a.log_amp_left == pytest.approx(b.log_amp_left, rel=1e-13)
            assert a.log_amp_right == pytest.approx(b.log_amp_right, rel=1e-13)
            assert a.winner is b.winner and a.decided == b.decided

    def test_mismatched_sizes(self, default_spec, default_barrier):
        with pytest.raises(ConfigurationError):
            collective_selection(_ensemble(default_spec, default_barrier, 2), _ensemble(default_spec, default_barrier, 3, 1),
                                 ANGSTROM)

    def test_matches_decision_on_sums(self, default_spec, default_barrier):
        k = default_barrier.kappa
        left = _ensemble(default_spec, default_barrier, 3, 0, "L")
        right = _ensemble(default_spec, default_barrier, 3, 0, "R")
        for scaling, factor in (("fixed", 1), ("linear", 3)):
            o = collective_selection(left, right, 0.2 * ANGSTROM, threshold_scaling=scaling)
            assert o.threshold == pytest.approx(factor * k * 0.2 * ANGSTROM)
            ref = decide(-k * o.phi_min_left, -k * o.phi_min_right, o.threshold)
            assert ref.winner is o.winner

    @pytest.mark.slow
    def test_ambiguity_shrinks_with_observers(self, default_spec, default_barrier):
        k = default_barrier.kappa
        a = 0.5 * ANGSTROM
        fractions = {}
        for n in (1, 4, 16):
            left = summed_extrema(default_spec, SHORT, n, 500, 21, channel="L")
            right = summed_extrema(default_spec, SHORT, n, 500, 21, channel="R")
            fixed = [decide(-k * l, -k * r, k * a).winner for l, r in zip(left, right)]
            linear = [decide(-k * l, -k * r, n * k * a).winner for l, r in zip(left, right)]
            fractions[n] = (np.mean([w is Winner.AMBIGUOUS for w in fixed]),
                            np.mean([w is Winner.AMBIGUOUS for w in linear]))
        assert fractions[1][0] >= fractions[4][0] >= fractions[16][0]
        # with the threshold scaled by n the trend reverses
        assert fractions[16][1] > fractions[1][1]

    @pytest.mark.slow
    def test_exchange_symmetry(self, default_spec, default_barrier):
        k = default_barrier.kappa
        left = summed_extrema(default_spec, SHORT, 2, 1300, 31, channel="L")
        right = summed_extrema(default_spec, SHORT, 2, 1300, 31, channel="R")
        winners = [decide(-k * l, -k * r, k * 0.05 * ANGSTROM).winner for l, r in zip(left, right)]
        decided = [w for w in winners if w is not Winner.AMBIGUOUS]
        assert len(decided) >= 1000
        assert np.mean([w is Winner.LEFT for w in decided]) == pytest.approx(0.5, abs=0.03)


class TestScaling:
    def test_ratio_table(self):
        rows = scaling_ratios([(1, 2.0), (4, 4.2)])
        assert rows[0] == (1, 2.0, 1.0) and rows[1][2] == pytest.approx(2.1)
        with pytest.raises(ConfigurationError):
            scaling_ratios([(4, 1.0)])

    def test_trials_guard(self, default_spec, default_barrier):
        with pytest.raises(ConfigurationError):
            sqrt_n_scaling_check(default_spec, default_barrier, SHORT, [1], 50)

    @pytest.mark.slow
    def test_n4_ratio(self, default_spec, default_barrier):
        rows = scaling_ratios(sqrt_n_scaling_check(default_spec, default_barrier, SHORT, [1, 4], 500, master_seed=8))
        assert 1.8 <= rows[1][2] <= 2.2
