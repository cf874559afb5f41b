"""
Unit Tests for Array Simulator Module

Tests word-level read/write mechanics, the failure-aware probe, and the
Monte Carlo FIT, yield and survival estimators against the closed forms.
"""

import math
import unittest

import numpy as np

from models.array_sim import (ArrayTemplate, ErrorModel, FaultMap, ReadStats, build_array,
                              estimate_array_survival, measure_fit, measure_yield, run_workload)
from models.ecc_codec import CodeMode, DecodeStatus, build_scheme
from models.exceptions import (AddressError, ArrayDimensionError, ClockError, LengthMismatchError,
                               SttLabError)
from models.monte_carlo import McConfig, binomial_sigma
from models.reliability_math import (ATTEMPT_TIME_S, FIT_DEVICE_HOURS, SECONDS_PER_HOUR, ArraySpec,
                                     HardFaultProfile, analytic_yield, array_survival, lifetime_seconds,
                                     retention_failure)


class TestSimArray(unittest.TestCase):
    """Test suite for single-array read and write behavior"""

    def setUp(self):
        self.scheme = build_scheme(4, 11, CodeMode.FAECC)
        self.spec = ArraySpec(k=11, n=16, s=8, m=1)
        self.mc = McConfig(seed=5, trials=1, sigma_fraction=0.0)
        self.data = np.array([1, 0, 1, 1, 1, 0, 0, 1, 0, 1, 0], dtype=np.uint8)
        self.arr = build_array(self.spec, self.scheme, 60.0, self.mc, ErrorModel(retention=False))

    def test_write_then_read(self):
        """Test that a written word reads back clean"""
        self.arr.write_word(3, self.data, 0.0)
        result = self.arr.read_word(3, 1.0)
        self.assertEqual(result.outcome.status, DecodeStatus.CLEAN)
        self.assertFalse(result.probe_used)
        np.testing.assert_array_equal(result.data, self.data)

    def test_clock_cannot_move_backwards(self):
        """Test that operations before the array clock are rejected"""
        self.arr.write_word(0, self.data, 5.0)
        with self.assertRaises(ClockError):
            self.arr.read_word(0, 4.0)

    def test_address_checked(self):
        """Test that out-of-range word addresses are rejected"""
        with self.assertRaises(AddressError):
            self.arr.write_word(8, self.data, 0.0)
        with self.assertRaises(AddressError):
            self.arr.raw_read(-1, 0.0)

    def test_single_soft_error_corrected(self):
        """Test that one soft error is corrected without the probe"""
        self.arr.write_word(1, self.data, 0.0)
        self.arr.inject_soft_error(1, 4)
        result = self.arr.read_word(1, 0.0)
        self.assertEqual(result.outcome.status, DecodeStatus.CORRECTED_SINGLE)
        self.assertFalse(result.probe_used)

    def test_two_stuck_cells_resolved_by_probe(self):
        """Test that two stuck-at-wrong cells are located and corrected"""
        # Both positions are data bits, so stuck-at-wrong means the inverted data bit.
        faults = FaultMap(((2, 0, 1 - int(self.data[0])), (2, 5, 1 - int(self.data[5]))))
        self.arr.inject_fault_map(faults)
        self.assertEqual(self.arr.stuck_positions(2), frozenset({0, 5}))
        self.arr.write_word(2, self.data, 0.0)
        result = self.arr.read_word(2, 0.0)
        self.assertTrue(result.probe_used)
        self.assertTrue(result.outcome.via_erasure)
        np.testing.assert_array_equal(result.data, self.data)
        self.assertEqual(self.arr.stats.probe_reads, 1)

    def test_two_soft_errors_lost(self):
        """Test that two soft errors are data loss even after the probe"""
        self.arr.write_word(4, self.data, 0.0)
        self.arr.inject_soft_error(4, 1)
        self.arr.inject_soft_error(4, 9)
        result = self.arr.read_word(4, 0.0)
        self.assertTrue(result.probe_used)
        self.assertFalse(result.recovered)
        self.assertEqual(self.arr.stats.data_loss, 1)

    def test_probe_restores_first_read_on_failure(self):
        """Test that an uncorrectable word is written back as first read"""
        self.arr.write_word(4, self.data, 0.0)
        self.arr.inject_soft_error(4, 1)
        self.arr.inject_soft_error(4, 9)
        before = self.arr.raw_read(4, 0.0)
        self.arr.read_word(4, 0.0)
        np.testing.assert_array_equal(self.arr.raw_read(4, 0.0), before)

    def test_soft_error_on_stuck_cell_rejected(self):
        """Test that a stuck cell cannot take a soft error"""
        self.arr.inject_fault_map(FaultMap(((0, 3, 1),)))
        with self.assertRaises(SttLabError):
            self.arr.inject_soft_error(0, 3)

    def test_stuck_cell_ignores_writes(self):
        """Test that a stuck cell keeps its value whatever is written"""
        self.arr.inject_fault_map(FaultMap(((6, 2, 0),)))
        self.arr.write_word(6, np.ones(11, dtype=np.uint8), 0.0)
        self.assertEqual(self.arr.cell(6, 2).value, 0)
        self.assertEqual(int(self.arr.cell(6, 2).stuck), 0)

    def test_retention_flips_after_aging(self):
        """Test that cells with a tiny barrier lose their data after aging"""
        scheme = build_scheme(0, 11, CodeMode.NONE)
        spec = ArraySpec(k=11, n=11, s=4)
        arr = build_array(spec, scheme, 2.0, self.mc)
        for addr in range(4):
            arr.write_word(addr, self.data, 0.0)
        flips = sum(int((arr.raw_read(addr, 1.0) != self.data).sum()) for addr in range(4))
        self.assertGreater(flips, 0)

    def test_write_failures_counted(self):
        """Test that certain write failures leave every cell at its old value"""
        arr = build_array(self.spec, self.scheme, 60.0, self.mc,
                          ErrorModel(p_write_fail=1.0, retention=False))
        result = arr.write_word(0, np.ones(11, dtype=np.uint8), 0.0)
        self.assertGreater(result.mismatches, 0)
        self.assertFalse(arr.raw_read(0, 0.0).any())

    def test_dimension_limit(self):
        """Test that oversized arrays are refused before allocation"""
        with self.assertRaises(ArrayDimensionError):
            build_array(ArraySpec(k=11, n=16, s=2 ** 24), self.scheme, 60.0, self.mc)

    def test_geometry_must_match_code(self):
        """Test that a spec disagreeing with the code is rejected"""
        with self.assertRaises(LengthMismatchError):
            build_array(ArraySpec(k=11, n=17, s=4), self.scheme, 60.0, self.mc)

    def test_trace_records_operations(self):
        """Test that the optional trace logs every word operation"""
        arr = build_array(self.spec, self.scheme, 60.0, self.mc, record_trace=True)
        arr.write_word(0, self.data, 0.0)
        arr.read_word(0, 2.0)
        self.assertEqual([record.op for record in arr.trace], ['write', 'read'])
        self.assertEqual(arr.trace[1].outcome, 'clean')

    def test_build_is_deterministic(self):
        """Test that the same seed builds the same array"""
        mc = McConfig(seed=3, trials=1, sigma_fraction=0.05)
        first = build_array(self.spec, self.scheme, 40.0, mc, p_defect=0.05)
        second = build_array(self.spec, self.scheme, 40.0, mc, p_defect=0.05)
        np.testing.assert_array_equal(first.t_life, second.t_life)
        np.testing.assert_array_equal(first.stuck, second.stuck)


class TestWorkload(unittest.TestCase):
    """Test suite for the write / age / read workload"""

    def test_fresh_array_reads_clean(self):
        """Test that a high-barrier array shows no errors after an hour"""
        scheme = build_scheme(4, 11, CodeMode.SECDED)
        spec = ArraySpec(k=11, n=16, s=32, m=1)
        mc = McConfig(seed=9, trials=1, sigma_fraction=0.0)
        arr = build_array(spec, scheme, 60.0, mc)
        report = run_workload(arr, SECONDS_PER_HOUR, mc)
        self.assertEqual(report.stats.reads, 32)
        self.assertEqual(report.stats.clean, 32)
        self.assertEqual(report.silent_corruptions, 0)

    def test_sensing_noise_is_corrected(self):
        """Test that rare read flips show up as single corrections"""
        scheme = build_scheme(4, 11, CodeMode.SECDED)
        spec = ArraySpec(k=11, n=16, s=200, m=1)
        mc = McConfig(seed=9, trials=1, sigma_fraction=0.0)
        arr = build_array(spec, scheme, 60.0, mc, ErrorModel(p_read_flip=0.01))
        report = run_workload(arr, 1.0, mc)
        self.assertGreater(report.stats.corrected_single, 0)
        fractions = report.stats.scenario_fractions()
        self.assertAlmostEqual(sum(fractions.values()), 1.0)

    def test_empty_stats(self):
        """Test that no reads give zero fractions"""
        self.assertEqual(sum(ReadStats().scenario_fractions().values()), 0.0)

class TestCellStatistics(unittest.TestCase):
    """Test suite for sampled cell populations against their distributions"""

    def setUp(self):
        self.scheme = build_scheme(0, 16, CodeMode.NONE)
        self.spec = ArraySpec(k=16, n=16, s=6250)
        self.mc = McConfig(seed=11, trials=1, sigma_fraction=0.0)

    def test_build_array_barrier_mean(self):
        """Test that the sampled ebn mean lies within four standard errors of nominal"""
        mc = McConfig(seed=11, trials=1, sigma_fraction=0.05)
        arr = build_array(ArraySpec(k=16, n=16, s=1000), self.scheme, 60.0, mc)
        ebn = np.log(arr.t_life / ATTEMPT_TIME_S).ravel()
        standard_error = 0.05 * 60.0 / math.sqrt(ebn.size)
        self.assertLess(abs(float(ebn.mean()) - 60.0), 4.0 * standard_error)
        self.assertAlmostEqual(float(ebn.std()) / 3.0, 1.0, delta=0.05)

    def test_write_failures_at_binomial_mean(self):
        """Test that write_word leaves cells unwritten at the p_write_fail rate"""
        arr = build_array(self.spec, self.scheme, 60.0, self.mc,
                          ErrorModel(p_write_fail=0.2, retention=False))
        ones = np.ones(16, dtype=np.uint8)
        mismatches = sum(arr.write_word(addr, ones, 0.0).mismatches for addr in range(self.spec.s))
        cells = self.spec.s * self.spec.n
        self.assertLess(abs(mismatches / cells - 0.2), 4.0 * binomial_sigma(0.2, cells))

    def test_raw_read_flips_at_retention_rate(self):
        """Test that raw_read sees 1 - exp(-t / t_life) of 1e5 cells flipped"""
        arr = build_array(self.spec, self.scheme, 20.0, self.mc)
        t_life = lifetime_seconds(20.0)
        zeros = np.zeros(16, dtype=np.uint8)
        for addr in range(self.spec.s):
            arr.write_word(addr, zeros, 0.0)
        cell = arr.cell(0, 0)
        self.assertEqual(cell.last_write, 0.0)
        self.assertAlmostEqual(cell.t_life_cell / t_life, 1.0, places=9)
        flipped = sum(int(arr.raw_read(addr, 0.1 * t_life).sum()) for addr in range(self.spec.s))
        cells = self.spec.s * self.spec.n
        expected = retention_failure(0.1 * t_life, t_life)
        self.assertLess(abs(flipped / cells - expected), 4.0 * binomial_sigma(expected, cells))



class TestEstimators(unittest.TestCase):
    """Test suite for Monte Carlo estimators against the closed forms"""

    def test_single_cell_fit(self):
        """Test that the measured FIT of one cell matches 1e9 / t_life"""
        scheme = build_scheme(0, 1, CodeMode.NONE)
        spec = ArraySpec(k=1, n=1, s=1)
        mc = McConfig(seed=21, trials=20000, sigma_fraction=0.0)
        estimate = measure_fit(ArrayTemplate(spec, scheme, 40.0), mc)
        expected = FIT_DEVICE_HOURS / (lifetime_seconds(40.0) / SECONDS_PER_HOUR)
        self.assertAlmostEqual(estimate.value / expected, 1.0, delta=0.05)
        self.assertTrue(estimate.contains(estimate.value))

    def test_fit_with_horizon_without_failures(self):
        """Test that a horizon with no failures gives a one-sided bound"""
        scheme = build_scheme(0, 1, CodeMode.NONE)
        mc = McConfig(seed=21, trials=100, sigma_fraction=0.0)
        estimate = measure_fit(ArrayTemplate(ArraySpec(k=1, n=1, s=1), scheme, 60.0), mc,
                               horizon=1e-6)
        self.assertTrue(estimate.one_sided)
        self.assertEqual(estimate.value, 0.0)
        self.assertGreater(estimate.high, 0.0)

    def test_fit_worker_count_invariant(self):
        """Test that the FIT estimate does not depend on the worker count"""
        scheme = build_scheme(0, 1, CodeMode.NONE)
        template = ArrayTemplate(ArraySpec(k=1, n=1, s=1), scheme, 40.0)
        one = measure_fit(template, McConfig(seed=4, trials=5000, workers=1))
        four = measure_fit(template, McConfig(seed=4, trials=5000, workers=4))
        self.assertEqual(one, four)

    def test_yield_matches_closed_form(self):
        """Test measured yield against the binomial closed form"""
        spec = ArraySpec(k=11, n=16, s=100, m=1)
        mc = McConfig(seed=2, trials=2000)
        measured = measure_yield(spec, CodeMode.SECDED, 0.01, mc)
        self.assertAlmostEqual(measured.value, analytic_yield(spec, 1, 0.01), delta=0.05)

    def test_faecc_yield_dominates_secded(self):
        """Test that absorbing two hard faults never lowers paired yield"""
        spec = ArraySpec(k=11, n=16, s=100, m=1)
        mc = McConfig(seed=2, trials=500)
        secded = measure_yield(spec, build_scheme(4, 11, CodeMode.SECDED), 0.01, mc)
        faecc = measure_yield(spec, build_scheme(4, 11, CodeMode.FAECC), 0.01, mc)
        self.assertGreaterEqual(faecc.value, secded.value)

    def test_fit_scales_with_word_count(self):
        """Test that an unprotected array's FIT grows linearly with its word count"""
        scheme = build_scheme(0, 16, CodeMode.NONE)
        mc = McConfig(seed=13, trials=4000, sigma_fraction=0.0)
        t_life_hours = lifetime_seconds(40.0) / SECONDS_PER_HOUR
        measured = {}
        for words in (4, 16, 64):
            spec = ArraySpec(k=16, n=16, s=words)
            measured[words] = measure_fit(ArrayTemplate(spec, scheme, 40.0), mc).value
            expected = FIT_DEVICE_HOURS * spec.n * words / t_life_hours
            self.assertAlmostEqual(measured[words] / expected, 1.0, delta=0.06)
        self.assertAlmostEqual(measured[64] / measured[4] / 16.0, 1.0, delta=0.1)

    def test_secded_fit_below_raw_fit(self):
        """Test that single-error correction lowers the FIT of the same data"""
        mc = McConfig(seed=13, trials=1000, sigma_fraction=0.0)
        raw = measure_fit(ArrayTemplate(ArraySpec(k=11, n=11, s=64),
                                        build_scheme(0, 11, CodeMode.NONE), 40.0), mc)
        secded = measure_fit(ArrayTemplate(ArraySpec(k=11, n=16, s=64, m=1),
                                           build_scheme(4, 11, CodeMode.SECDED), 40.0), mc)
        self.assertLess(secded.high, raw.low)

    def test_survival_oracle_agrees_with_closed_form(self):
        """Test analytic array survival against decoded fault injection at three points"""
        spec = ArraySpec(k=8, n=13, s=50, m=1)
        scheme = build_scheme(4, 8, CodeMode.SECDED)
        mc = McConfig(seed=17, trials=100_000, sigma_fraction=0.0)
        cases = [(0.01, HardFaultProfile.healthy(50)),
                 (0.02, HardFaultProfile.healthy(50)),
                 (0.01, HardFaultProfile((40, 10)))]
        for u, profile in cases:
            with self.subTest(u=u, profile=profile.counts):
                analytic = array_survival(u, 1.0, spec, profile).probability
                measured = estimate_array_survival(spec, scheme, profile, u, mc)
                self.assertLess(abs(measured.value - analytic), 3.0 * binomial_sigma(analytic, mc.trials))

    def test_survival_oracle_decodes_hard_faults(self):
        """Test that two stuck cells in a SECDED word fail decoding even without aging"""
        spec = ArraySpec(k=8, n=13, s=5, m=1)
        mc = McConfig(seed=17, trials=200)
        scheme = build_scheme(4, 8, CodeMode.SECDED)
        doubled = estimate_array_survival(spec, scheme, HardFaultProfile((4, 0, 1)), 0.0, mc)
        single = estimate_array_survival(spec, scheme, HardFaultProfile((4, 1)), 0.0, mc)
        self.assertEqual(doubled.value, 0.0)
        self.assertEqual(single.value, 1.0)

    def test_survival_oracle_needs_matching_capacity(self):
        """Test that the oracle refuses a code that corrects a different number of errors"""
        with self.assertRaises(SttLabError):
            estimate_array_survival(ArraySpec(k=8, n=13, s=5, m=2), build_scheme(4, 8, CodeMode.SECDED),
                                    None, 0.01, McConfig(trials=10))


if __name__ == "__main__":
    unittest.main()
