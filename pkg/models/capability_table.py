"""
Correction-capability verification.

Replays every placement of one or two errors (soft flips and stuck-at-wrong
cells) on a one-word simulated array and tallies whether the read path
returns the original data. Small codes are enumerated exhaustively; larger
ones are sampled.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations, permutations

import numpy as np

from models.array_sim import ErrorModel, FaultMap, build_array
from models.ecc_codec import CodeMode, encode
from models.exceptions import SttLabError
from models.reliability_math import ArraySpec

logger = logging.getLogger(__name__)

CAPABILITY_STREAM = 0x7461
# Retention is disabled for verification; the nominal barrier only sizes lifetimes.
VERIFY_EBN = 60.0


class ErrorPattern(Enum):
    ONE_ERROR = 'one soft or hard'
    TWO_HARD = 'two hard'
    SOFT_AND_HARD = 'one soft and one hard'
    TWO_SOFT = 'two soft'


EXPECTED = {
    CodeMode.SECDED: {ErrorPattern.ONE_ERROR: True, ErrorPattern.TWO_HARD: False,
                      ErrorPattern.SOFT_AND_HARD: False, ErrorPattern.TWO_SOFT: False},
    CodeMode.FAECC: {ErrorPattern.ONE_ERROR: True, ErrorPattern.TWO_HARD: True,
                     ErrorPattern.SOFT_AND_HARD: True, ErrorPattern.TWO_SOFT: False},
    CodeMode.DECTED: {pattern: True for pattern in ErrorPattern},
}


@dataclass(frozen=True)
class CapabilityCell:
    """One (pattern, mode) entry of the capability matrix."""
    mode: CodeMode
    pattern: ErrorPattern
    expected: bool
    cases: int
    corrected: int
    silent: int

    @property
    def realized(self):
        if self.corrected == self.cases:
            return 'yes'
        return 'no' if self.corrected == 0 else 'partial'

    @property
    def passed(self):
        return self.silent == 0 and self.realized == ('yes' if self.expected else 'no')


def _placements(pattern, n):
    """(soft positions, hard positions) for every placement of the pattern."""
    if pattern is ErrorPattern.ONE_ERROR:
        return [((i,), ()) for i in range(n)] + [((), (i,)) for i in range(n)]
    if pattern is ErrorPattern.TWO_HARD:
        return [((), pair) for pair in combinations(range(n), 2)]
    if pattern is ErrorPattern.SOFT_AND_HARD:
        return [((soft,), (hard,)) for hard, soft in permutations(range(n), 2)]
    return [(pair, ()) for pair in combinations(range(n), 2)]


def _data_words(scheme, mc, count):
    words = [np.zeros(scheme.k, dtype=np.uint8), np.ones(scheme.k, dtype=np.uint8)]
    rng = mc.stream(CAPABILITY_STREAM, 0)
    while len(words) < count:
        words.append(rng.integers(0, 2, size=scheme.k, dtype=np.uint8))
    return words[:count]


def run_case(scheme, data, soft, hard, mc):
    """
    Write data to a fresh one-word array whose `hard` cells are stuck at the
    opposite of their codeword bit, flip the `soft` cells, and read it back.
    """
    codeword = encode(scheme, data)
    spec = ArraySpec(k=scheme.k, n=scheme.n, s=1, m=scheme.capacity.max_errors)
    faults = FaultMap(tuple((0, b, 1 - int(codeword[b])) for b in hard))
    arr = build_array(spec, scheme, VERIFY_EBN, mc, ErrorModel(retention=False), fault_map=faults)
    arr.write_word(0, data, 0.0)
    for b in soft:
        arr.inject_soft_error(0, b)
    return arr.read_word(0, 0.0)


def verify_pattern(scheme, pattern, mc, data_words=3, max_cases=2000):
    placements = _placements(pattern, scheme.n)
    if len(placements) > max_cases:
        rng = mc.stream(CAPABILITY_STREAM, 1 + list(ErrorPattern).index(pattern))
        chosen = np.sort(rng.choice(len(placements), size=max_cases, replace=False))
        placements = [placements[i] for i in chosen]
    cases = corrected = silent = 0
    for data in _data_words(scheme, mc, data_words):
        for soft, hard in placements:
            result = run_case(scheme, data, soft, hard, mc)
            cases += 1
            if result.recovered:
                if np.array_equal(result.data, data):
                    corrected += 1
                else:
                    silent += 1
    cell = CapabilityCell(scheme.mode, pattern, EXPECTED[scheme.mode][pattern], cases, corrected, silent)
    logger.debug("%s / %s: %d of %d corrected", scheme.mode.value, pattern.value, corrected, cases)
    return cell


def verify_capability(scheme, mc, data_words=3, max_cases=2000):
    """
    Realized correction-capability column for the scheme's mode.

    Returns one CapabilityCell per error pattern; a cell passes when its
    realized yes/no matches the expected entry and no read returned wrong
    data as recovered.
    """
    if scheme.mode not in EXPECTED:
        raise SttLabError(f"no capability column for mode {scheme.mode.value}")
    cells = [verify_pattern(scheme, pattern, mc, data_words, max_cases) for pattern in ErrorPattern]
    failed = [cell for cell in cells if not cell.passed]
    if failed:
        logger.warning("%d capability cells disagree for %r", len(failed), scheme)
    return cells
