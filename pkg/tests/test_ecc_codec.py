"""
Unit Tests for ECC Codec Module

Tests code construction, encoding, syndrome decoding and the stuck-bit
erasure resolution of the failure-aware decoder.
"""

import unittest
from itertools import combinations

import numpy as np

from models.ecc_codec import (CodeMode, DecodeStatus, Syndrome, build_scheme, correction_capacity,
                              decode, decode_dected, decode_secded, double_error_candidates, encode,
                              locate_stuck_bits, resolve_double_with_erasure, syndrome)
from models.exceptions import CodeConstructionError, LengthMismatchError


def _flipped(codeword, positions):
    word = codeword.copy()
    for p in positions:
        word[p] ^= 1
    return word


class TestConstruction(unittest.TestCase):
    """Test suite for code construction"""

    def test_secded_dimensions(self):
        """Test the stored word length of SECDED codes"""
        self.assertEqual(build_scheme(4, 11, CodeMode.SECDED).n, 16)
        self.assertEqual(build_scheme(8, 128, 'secded').n, 137)

    def test_dected_dimensions(self):
        """Test the stored word length of DECTED codes"""
        self.assertEqual(build_scheme(8, 128, CodeMode.DECTED).n, 145)
        self.assertEqual(build_scheme(4, 5, CodeMode.DECTED).n, 14)
        self.assertEqual(build_scheme(4, 7, CodeMode.DECTED).n, 16)

    def test_hamming_bound(self):
        """Test that too many data bits for the field are rejected"""
        with self.assertRaises(CodeConstructionError):
            build_scheme(4, 12, CodeMode.SECDED)
        with self.assertRaises(CodeConstructionError):
            build_scheme(4, 8, CodeMode.DECTED)

    def test_unknown_degree(self):
        """Test that a degree without a primitive polynomial is rejected"""
        with self.assertRaises(CodeConstructionError):
            build_scheme(17, 8, CodeMode.SECDED)

    def test_generator_orthogonal_to_parity_check(self):
        """Test G . H^T = 0 over GF(2) for every mode"""
        for deg, k, mode in ((4, 11, 'secded'), (4, 11, 'faecc'), (4, 5, 'dected'), (8, 128, 'dected')):
            with self.subTest(mode=mode, k=k):
                scheme = build_scheme(deg, k, mode)
                product = (scheme.generator.astype(int) @ scheme.parity_check.T.astype(int)) % 2
                self.assertFalse(product.any())

    def test_systematic_layout(self):
        """Test that data bits lead the codeword and parity is last"""
        scheme = build_scheme(4, 11, CodeMode.SECDED)
        data = np.array([1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1], dtype=np.uint8)
        codeword = encode(scheme, data)
        np.testing.assert_array_equal(codeword[:11], data)
        self.assertEqual(int(codeword.sum()) % 2, 0)

    def test_capacity_table(self):
        """Test the (soft, hard) error mixes each mode absorbs"""
        self.assertTrue(correction_capacity('faecc').corrects(1, 1))
        self.assertFalse(correction_capacity('faecc').corrects(2, 0))
        self.assertTrue(correction_capacity('dected').corrects(2, 0))
        self.assertFalse(correction_capacity('secded').corrects(0, 2))
        self.assertEqual(correction_capacity('none').max_hard, 0)

    def test_wrong_length(self):
        """Test that data words of the wrong length are rejected"""
        scheme = build_scheme(4, 11, CodeMode.SECDED)
        with self.assertRaises(LengthMismatchError):
            encode(scheme, np.zeros(10, dtype=np.uint8))
        with self.assertRaises(LengthMismatchError):
            syndrome(scheme, np.zeros(15, dtype=np.uint8))


class TestSecded(unittest.TestCase):
    """Test suite for SECDED decoding"""

    def setUp(self):
        self.scheme = build_scheme(4, 11, CodeMode.SECDED)
        self.data = np.array([0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 1], dtype=np.uint8)
        self.codeword = encode(self.scheme, self.data)

    def test_clean_word(self):
        """Test that a codeword decodes clean"""
        outcome = decode_secded(self.scheme, self.codeword)
        self.assertEqual(outcome.status, DecodeStatus.CLEAN)
        self.assertTrue(syndrome(self.scheme, self.codeword).is_zero)

    def test_every_single_error_corrected(self):
        """Test correction of a flip at every position, parity included"""
        for position in range(self.scheme.n):
            outcome = decode_secded(self.scheme, _flipped(self.codeword, [position]))
            self.assertEqual(outcome.status, DecodeStatus.CORRECTED_SINGLE)
            self.assertEqual(outcome.positions, (position,))
            np.testing.assert_array_equal(outcome.data, self.data)

    def test_every_double_error_detected(self):
        """Test detection of every pair of flips"""
        for pair in combinations(range(self.scheme.n), 2):
            outcome = decode_secded(self.scheme, _flipped(self.codeword, pair))
            self.assertEqual(outcome.status, DecodeStatus.DOUBLE_DETECTED)
            self.assertFalse(outcome.recovered)

    def test_none_mode_passes_through(self):
        """Test that an unprotected word is returned as read"""
        scheme = build_scheme(0, 4, CodeMode.NONE)
        word = np.array([1, 0, 0, 1], dtype=np.uint8)
        outcome = decode(scheme, word)
        self.assertEqual(outcome.status, DecodeStatus.CLEAN)
        np.testing.assert_array_equal(outcome.data, word)


class TestFailureAware(unittest.TestCase):
    """Test suite for double-error resolution with known stuck cells"""

    def setUp(self):
        self.scheme = build_scheme(4, 11, CodeMode.FAECC)
        self.data = np.array([1, 1, 0, 0, 1, 0, 1, 0, 0, 1, 1], dtype=np.uint8)
        self.codeword = encode(self.scheme, self.data)

    def test_candidates_partition_positions(self):
        """Test that no position appears in two double-error candidates"""
        word = _flipped(self.codeword, (2, 9))
        candidates = double_error_candidates(self.scheme, syndrome(self.scheme, word))
        self.assertIn((2, 9), candidates)
        positions = [p for pair in candidates for p in pair]
        self.assertEqual(len(positions), len(set(positions)))

    def test_candidates_empty_for_odd_parity(self):
        """Test that a single-error syndrome has no double-error candidates"""
        word = _flipped(self.codeword, (4,))
        self.assertEqual(double_error_candidates(self.scheme, syndrome(self.scheme, word)), [])

    def test_resolution_with_one_stuck_cell(self):
        """Test that one known stuck cell picks the right pair"""
        for pair in combinations(range(self.scheme.n), 2):
            word = _flipped(self.codeword, pair)
            outcome = resolve_double_with_erasure(self.scheme, word, {pair[0]})
            self.assertEqual(outcome.status, DecodeStatus.CORRECTED_DOUBLE)
            self.assertEqual(outcome.positions, pair)
            self.assertTrue(outcome.via_erasure)
            np.testing.assert_array_equal(outcome.data, self.data)

    def test_resolution_without_stuck_cells(self):
        """Test that two soft errors stay uncorrectable"""
        word = _flipped(self.codeword, (0, 5))
        outcome = resolve_double_with_erasure(self.scheme, word, set())
        self.assertEqual(outcome.status, DecodeStatus.UNCORRECTABLE)

    def test_resolution_with_too_many_stuck_cells(self):
        """Test that more stuck cells than the erasure budget are not trusted"""
        word = _flipped(self.codeword, (0, 5))
        outcome = resolve_double_with_erasure(self.scheme, word, {0, 5, 7})
        self.assertEqual(outcome.status, DecodeStatus.UNCORRECTABLE)

    def test_resolution_falls_back_on_single_error(self):
        """Test that a single-error syndrome is corrected without erasures"""
        word = _flipped(self.codeword, (3,))
        outcome = resolve_double_with_erasure(self.scheme, word, {3})
        self.assertEqual(outcome.status, DecodeStatus.CORRECTED_SINGLE)
        self.assertFalse(outcome.via_erasure)

    def test_decode_dispatch(self):
        """Test that decode only resolves doubles when stuck positions are given"""
        word = _flipped(self.codeword, (1, 12))
        self.assertEqual(decode(self.scheme, word).status, DecodeStatus.DOUBLE_DETECTED)
        self.assertEqual(decode(self.scheme, word, {12}).status, DecodeStatus.CORRECTED_DOUBLE)

    def test_locate_stuck_bits(self):
        """Test that cells which did not invert are reported as stuck"""
        read_1 = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
        read_2 = np.array([0, 0, 0, 1, 1], dtype=np.uint8)
        self.assertEqual(locate_stuck_bits(read_1, read_2), frozenset({1, 3}))


class TestDected(unittest.TestCase):
    """Test suite for DECTED decoding"""

    def setUp(self):
        self.scheme = build_scheme(4, 5, CodeMode.DECTED)
        self.data = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
        self.codeword = encode(self.scheme, self.data)

    def test_clean_word(self):
        """Test that a codeword decodes clean"""
        self.assertEqual(decode_dected(self.scheme, self.codeword).status, DecodeStatus.CLEAN)

    def test_every_single_error_corrected(self):
        """Test correction of a flip at every position"""
        for position in range(self.scheme.n):
            outcome = decode_dected(self.scheme, _flipped(self.codeword, [position]))
            self.assertEqual(outcome.status, DecodeStatus.CORRECTED_SINGLE)
            np.testing.assert_array_equal(outcome.data, self.data)

    def test_every_double_error_corrected(self):
        """Test correction of every pair of flips, parity included"""
        for pair in combinations(range(self.scheme.n), 2):
            outcome = decode_dected(self.scheme, _flipped(self.codeword, pair))
            self.assertEqual(outcome.status, DecodeStatus.CORRECTED_DOUBLE)
            self.assertEqual(outcome.positions, pair)
            np.testing.assert_array_equal(outcome.data, self.data)

    def test_every_triple_error_detected(self):
        """Test that three flips are never miscorrected"""
        for triple in combinations(range(self.scheme.n), 3):
            outcome = decode_dected(self.scheme, _flipped(self.codeword, triple))
            self.assertEqual(outcome.status, DecodeStatus.UNCORRECTABLE)

    def test_large_code_double_error(self):
        """Test a double error on the 128-bit DECTED code"""
        scheme = build_scheme(8, 128, CodeMode.DECTED)
        data = np.random.default_rng(7).integers(0, 2, 128, dtype=np.uint8)
        codeword = encode(scheme, data)
        outcome = decode(scheme, _flipped(codeword, (3, 140)))
        self.assertEqual(outcome.status, DecodeStatus.CORRECTED_DOUBLE)
        np.testing.assert_array_equal(outcome.data, data)

class TestCodeInvariants(unittest.TestCase):
    """Test suite for properties that hold for every data word"""

    def setUp(self):
        self.rng = np.random.default_rng(2024)

    @staticmethod
    def _all_words(k):
        values = np.arange(2 ** k)
        return ((values[:, None] >> np.arange(k)) & 1).astype(np.uint8)

    def test_every_codeword_has_zero_syndrome(self):
        """Test that all 2^k codewords of small codes give a zero syndrome"""
        for deg, k, mode in ((4, 11, 'secded'), (4, 11, 'faecc'), (4, 7, 'dected'), (3, 4, 'secded')):
            scheme = build_scheme(deg, k, mode)
            with self.subTest(scheme=repr(scheme)):
                for data in self._all_words(k):
                    self.assertTrue(syndrome(scheme, encode(scheme, data)).is_zero)

    def test_encoding_is_linear(self):
        """Test encode(x xor y) = encode(x) xor encode(y)"""
        for deg, k, mode in ((4, 11, 'secded'), (8, 128, 'faecc'), (8, 128, 'dected')):
            scheme = build_scheme(deg, k, mode)
            with self.subTest(scheme=repr(scheme)):
                for _ in range(100):
                    x = self.rng.integers(0, 2, k, dtype=np.uint8)
                    y = self.rng.integers(0, 2, k, dtype=np.uint8)
                    np.testing.assert_array_equal(encode(scheme, x ^ y),
                                                  encode(scheme, x) ^ encode(scheme, y))

    def test_exhaustive_round_trip(self):
        """Test that every data word of a k <= 12 code decodes clean to itself"""
        for deg, k, mode in ((4, 11, 'secded'), (4, 11, 'faecc'), (4, 7, 'dected'), (4, 12, 'none')):
            scheme = build_scheme(deg, k, mode)
            with self.subTest(scheme=repr(scheme)):
                for data in self._all_words(k):
                    outcome = decode(scheme, encode(scheme, data))
                    self.assertEqual(outcome.status, DecodeStatus.CLEAN)
                    np.testing.assert_array_equal(outcome.data, data)

    def test_random_round_trip_large_code(self):
        """Test clean decoding of random 128-bit data words in every mode"""
        for mode in CodeMode:
            scheme = build_scheme(8, 128, mode)
            with self.subTest(mode=mode.value):
                for _ in range(200):
                    data = self.rng.integers(0, 2, 128, dtype=np.uint8)
                    outcome = decode(scheme, encode(scheme, data))
                    self.assertEqual(outcome.status, DecodeStatus.CLEAN)
                    np.testing.assert_array_equal(outcome.data, data)

    def test_single_error_corrected_for_many_words(self):
        """Test that one flip at any position is corrected for 64 random data words"""
        for deg, k, mode in ((4, 11, 'secded'), (4, 11, 'faecc'), (4, 7, 'dected')):
            scheme = build_scheme(deg, k, mode)
            with self.subTest(scheme=repr(scheme)):
                for _ in range(64):
                    data = self.rng.integers(0, 2, k, dtype=np.uint8)
                    codeword = encode(scheme, data)
                    for position in range(scheme.n):
                        outcome = decode(scheme, _flipped(codeword, [position]))
                        self.assertEqual(outcome.status, DecodeStatus.CORRECTED_SINGLE)
                        self.assertEqual(outcome.positions, (position,))
                        np.testing.assert_array_equal(outcome.data, data)

    def test_double_candidates_disjoint_for_every_syndrome(self):
        """Test that over all syndromes each position is named by at most one candidate pair"""
        for k in (11, 8, 5):
            scheme = build_scheme(4, k, CodeMode.FAECC)
            zero = np.zeros(scheme.n, dtype=np.uint8)
            with self.subTest(n=scheme.n):
                for value in range(2 ** scheme.check_bits):
                    bits = ((value >> np.arange(scheme.check_bits)) & 1).astype(np.uint8)
                    z = Syndrome(bits, scheme.deg)
                    pairs = double_error_candidates(scheme, z)
                    if z.parity or z.hamming_value == 0:
                        self.assertEqual(pairs, [])
                        continue
                    positions = [p for pair in pairs for p in pair]
                    self.assertEqual(len(positions), len(set(positions)))
                    for i, j in pairs:
                        self.assertLess(i, j)
                        np.testing.assert_array_equal(syndrome(scheme, _flipped(zero, [i, j])).bits,
                                                      bits)
                    if scheme.n == 16:
                        self.assertEqual(sorted(positions), list(range(16)))



if __name__ == "__main__":
    unittest.main()
