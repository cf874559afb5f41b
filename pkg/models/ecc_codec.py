"""
Systematic Binary Block Codes for Memory Words

SECDED (Hamming + overall parity), DECTED (shortened binary BCH with t = 2
plus overall parity) and the failure-aware variant of SECDED that resolves
double-error syndromes once the positions of stuck cells are known.

Codeword layout is fixed for every mode:

    [ data bits 0..k-1 | check bits | overall parity (position n-1) ]

so a stuck cell's position maps directly to a bit of the stored word.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import galois
import numpy as np

from models.exceptions import CodeConstructionError, LengthMismatchError

logger = logging.getLogger(__name__)

# Fixed primitive polynomials (integer form, bit i = coefficient of x^i).
PRIMITIVE_POLYNOMIALS = {
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0x11D,            # x^8 + x^4 + x^3 + x^2 + 1
    9: 0b1000010001,
    10: 0b10000001001,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}

# Most stuck cells the erasure resolver will trust in one word.
ERASURE_HARD_LIMIT = 2


class CodeMode(Enum):
    NONE = 'none'
    SECDED = 'secded'
    DECTED = 'dected'
    FAECC = 'faecc'


@dataclass(frozen=True)
class CorrectionCapacity:
    """Which (soft, hard) error mixes a word decoder recovers."""
    max_errors: int
    max_soft: int

    def corrects(self, soft, hard):
        return soft + hard <= self.max_errors and soft <= self.max_soft

    @property
    def max_hard(self):
        return self.max_errors


CAPACITY = {
    CodeMode.NONE: CorrectionCapacity(0, 0),
    CodeMode.SECDED: CorrectionCapacity(1, 1),
    CodeMode.FAECC: CorrectionCapacity(2, 1),
    CodeMode.DECTED: CorrectionCapacity(2, 2),
}


def correction_capacity(mode):
    """
    Errors a code mode guarantees to correct.

    Args:
        mode: CodeMode or its string value

    Returns:
        CorrectionCapacity: total, soft-only and hard-fault budgets
    """
    return CAPACITY[CodeMode(mode)]


class DecodeStatus(Enum):
    CLEAN = 'clean'
    CORRECTED_SINGLE = 'corrected_single'
    DOUBLE_DETECTED = 'double_detected'
    CORRECTED_DOUBLE = 'corrected_double'
    UNCORRECTABLE = 'uncorrectable'


@dataclass(frozen=True, eq=False)
class EccScheme:
    """
    Immutable code description.

    columns holds the Hamming/BCH part of each parity-check column as an
    integer; column_index inverts it for O(1) syndrome lookup. locators holds
    the GF(2^deg) error locator of every BCH position (DECTED only).
    """
    deg: int
    k: int
    n: int
    mode: CodeMode
    generator: np.ndarray
    parity_check: np.ndarray
    columns: tuple
    column_index: dict
    locators: tuple = ()
    field: type = None

    @property
    def check_bits(self):
        return self.n - self.k

    @property
    def capacity(self):
        return CAPACITY[self.mode]

    def __repr__(self):
        return f"EccScheme(mode={self.mode.value}, deg={self.deg}, k={self.k}, n={self.n})"


@dataclass(frozen=True, eq=False)
class Syndrome:
    bits: np.ndarray
    deg: int

    @property
    def parity(self):
        return int(self.bits[-1]) if self.bits.size else 0

    @property
    def hamming_value(self):
        return _bits_to_int(self.bits[:self.deg])

    @property
    def cubic_value(self):
        return _bits_to_int(self.bits[self.deg:2 * self.deg])

    @property
    def is_zero(self):
        return not self.bits.any()


@dataclass(frozen=True, eq=False)
class DecodeOutcome:
    status: DecodeStatus
    positions: tuple = ()
    data: np.ndarray = None
    codeword: np.ndarray = None
    via_erasure: bool = False

    @property
    def recovered(self):
        return self.status in (DecodeStatus.CLEAN, DecodeStatus.CORRECTED_SINGLE,
                               DecodeStatus.CORRECTED_DOUBLE)


def _bits_to_int(bits):
    return int(sum(int(b) << i for i, b in enumerate(bits)))


def _int_to_bits(value, width):
    return np.array([(value >> b) & 1 for b in range(width)], dtype=np.uint8)


def _field(deg):
    if deg not in PRIMITIVE_POLYNOMIALS:
        raise CodeConstructionError(f"no primitive polynomial tabulated for deg={deg}")
    return galois.GF(2 ** deg, irreducible_poly=PRIMITIVE_POLYNOMIALS[deg])


def _freeze(matrix):
    matrix = np.ascontiguousarray(matrix, dtype=np.uint8)
    matrix.setflags(write=False)
    return matrix


def _independent_columns(values, width):
    """Indices of the first `width` linearly independent GF(2) vectors."""
    basis = {}
    chosen = []
    for index, value in values:
        v = value
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                chosen.append(index)
                break
            v ^= basis[top]
        if len(chosen) == width:
            break
    return chosen


def _build_none(k):
    eye = np.eye(k, dtype=np.uint8)
    return EccScheme(0, k, k, CodeMode.NONE, _freeze(eye), _freeze(np.zeros((0, k))),
                     tuple([0] * k), {})


def _build_secded(deg, k, mode):
    if k > 2 ** deg - deg - 1:
        raise CodeConstructionError(f"k={k} exceeds the Hamming bound 2^{deg}-{deg}-1")
    gf = _field(deg)
    alpha = gf(2)
    n = k + deg + 1
    # Check bits take the unit vectors alpha^0..alpha^(deg-1); data bits take
    # the following powers, which are never unit vectors.
    data_columns = [int(alpha ** (deg + i)) for i in range(k)]
    check_columns = [1 << b for b in range(deg)]
    columns = data_columns + check_columns + [0]

    parity_check = np.zeros((deg + 1, n), dtype=np.uint8)
    for position, value in enumerate(columns):
        parity_check[:deg, position] = _int_to_bits(value, deg)
    parity_check[deg, :] = 1

    generator = np.zeros((k, n), dtype=np.uint8)
    generator[:, :k] = np.eye(k, dtype=np.uint8)
    for i, value in enumerate(data_columns):
        check = _int_to_bits(value, deg)
        generator[i, k:k + deg] = check
        generator[i, n - 1] = (1 + int(check.sum())) & 1

    return EccScheme(deg, k, n, mode, _freeze(generator), _freeze(parity_check),
                     tuple(columns), {value: pos for pos, value in enumerate(columns)},
                     field=gf)


def _build_dected(deg, k):
    r = 2 * deg
    length = k + r
    if length > 2 ** deg - 1:
        raise CodeConstructionError(f"k={k} exceeds the DECTED bound 2^{deg}-2*{deg}-1")
    gf = _field(deg)
    alpha = gf(2)
    n = length + 1

    def bch_column(e):
        return int(alpha ** e) | (int(alpha ** (3 * e)) << deg)

    full = [(e, bch_column(e)) for e in range(length)]
    # Check positions are the highest independent exponents; everything else is data.
    pivots = _independent_columns(reversed(full), r)
    if len(pivots) < r:
        raise CodeConstructionError(f"BCH parity-check matrix for deg={deg} is rank deficient")
    pivot_set = set(pivots)
    data_exponents = [e for e in range(length) if e not in pivot_set]
    check_exponents = sorted(pivots)
    exponents = data_exponents + check_exponents

    bch = np.zeros((r, length), dtype=np.uint8)
    for position, e in enumerate(exponents):
        bch[:, position] = _int_to_bits(bch_column(e), r)

    gf2 = galois.GF(2)
    data_part = gf2(bch[:, :k])
    check_inverse = np.linalg.inv(gf2(bch[:, k:]))
    checks = np.asarray(check_inverse @ data_part, dtype=np.uint8)    # r x k

    generator = np.zeros((k, n), dtype=np.uint8)
    generator[:, :k] = np.eye(k, dtype=np.uint8)
    generator[:, k:length] = checks.T
    generator[:, n - 1] = (1 + generator[:, k:length].sum(axis=1)) & 1

    parity_check = np.zeros((r + 1, n), dtype=np.uint8)
    parity_check[:r, :length] = bch
    parity_check[r, :] = 1

    columns = [bch_column(e) for e in exponents] + [0]
    locators = tuple(int(alpha ** e) for e in exponents)
    return EccScheme(deg, k, n, CodeMode.DECTED, _freeze(generator), _freeze(parity_check),
                     tuple(columns), {value: pos for pos, value in enumerate(columns)},
                     locators, gf)


def build_scheme(deg, k, mode):
    """
    Construct the generator and parity-check matrices of a code.

    Args:
        deg: Galois-field degree
        k: data bits per word
        mode: CodeMode or its string value

    Raises:
        CodeConstructionError: k violates the code bound or deg has no
            tabulated primitive polynomial
    """
    mode = CodeMode(mode)
    if k < 1:
        raise CodeConstructionError("k must be >= 1")
    if mode is CodeMode.NONE:
        scheme = _build_none(k)
    elif mode is CodeMode.DECTED:
        scheme = _build_dected(deg, k)
    else:
        scheme = _build_secded(deg, k, mode)
    logger.debug("Built %r", scheme)
    return scheme


def _as_bits(bits, length, what):
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size != length:
        raise LengthMismatchError(f"{what} has {bits.size} bits, expected {length}")
    return bits


def encode(scheme, data):
    """Systematic codeword (data . G) mod 2."""
    data = _as_bits(data, scheme.k, "data word")
    return ((data.astype(np.int64) @ scheme.generator) & 1).astype(np.uint8)


def syndrome(scheme, codeword):
    """z = c . H^T mod 2."""
    codeword = _as_bits(codeword, scheme.n, "codeword")
    bits = ((codeword.astype(np.int64) @ scheme.parity_check.T) & 1).astype(np.uint8)
    return Syndrome(bits, scheme.deg)


def _flip(scheme, codeword, positions, status, via_erasure=False):
    corrected = codeword.copy()
    for p in positions:
        corrected[p] ^= 1
    return DecodeOutcome(status, tuple(sorted(positions)), corrected[:scheme.k].copy(),
                         corrected, via_erasure)


def decode_secded(scheme, codeword):
    """
    Single-error correction with double-error detection.

    Odd overall parity means one flipped bit, located by its Hamming column
    (column zero is the parity bit itself); even parity with a nonzero
    Hamming syndrome means two flips.
    """
    codeword = _as_bits(codeword, scheme.n, "codeword")
    if scheme.mode is CodeMode.NONE:
        return DecodeOutcome(DecodeStatus.CLEAN, (), codeword.copy(), codeword.copy())
    z = syndrome(scheme, codeword)
    h = z.hamming_value
    if h == 0 and z.parity == 0:
        return DecodeOutcome(DecodeStatus.CLEAN, (), codeword[:scheme.k].copy(), codeword.copy())
    if z.parity == 1:
        position = scheme.column_index.get(h)
        if position is None:
            return DecodeOutcome(DecodeStatus.UNCORRECTABLE)
        return _flip(scheme, codeword, [position], DecodeStatus.CORRECTED_SINGLE)
    return DecodeOutcome(DecodeStatus.DOUBLE_DETECTED)


def double_error_candidates(scheme, z):
    """
    All position pairs (i, j), i < j, whose double flip produces syndrome z.

    For a fixed i the partner j is determined by z xor column(i), so no
    position can appear in two candidates.
    """
    h = z.hamming_value
    if h == 0 or z.parity:
        return []
    candidates = []
    for i, value in enumerate(scheme.columns):
        j = scheme.column_index.get(h ^ value)
        if j is not None and j > i:
            candidates.append((i, j))
    return candidates


def resolve_double_with_erasure(scheme, codeword, stuck_positions):
    """
    Pick the double-error candidate that touches a known stuck cell.

    Exactly one candidate may touch the stuck set; zero or several matches,
    an empty stuck set, or more stuck cells than the erasure budget leave
    the word uncorrectable.
    """
    codeword = _as_bits(codeword, scheme.n, "codeword")
    z = syndrome(scheme, codeword)
    if z.parity == 1 or z.hamming_value == 0:
        # Not a double-error syndrome; plain SECDED handles it.
        return decode_secded(scheme, codeword)
    stuck = set(int(p) for p in stuck_positions)
    if not stuck or len(stuck) > ERASURE_HARD_LIMIT:
        return DecodeOutcome(DecodeStatus.UNCORRECTABLE)
    touching = [pair for pair in double_error_candidates(scheme, z) if stuck.intersection(pair)]
    if len(touching) != 1:
        logger.debug("Erasure resolution ambiguous: %d candidates touch %s", len(touching), stuck)
        return DecodeOutcome(DecodeStatus.UNCORRECTABLE)
    return _flip(scheme, codeword, touching[0], DecodeStatus.CORRECTED_DOUBLE, via_erasure=True)


def decode_dected(scheme, codeword):
    """
    Double-error correction, triple-error detection (Peterson, t = 2).

    Error locators X satisfy X^2 + S1*X + (S3 + S1^3)/S1 = 0; the overall
    parity separates a BCH single error from single-plus-parity and flags
    odd error counts above one.
    """
    codeword = _as_bits(codeword, scheme.n, "codeword")
    z = syndrome(scheme, codeword)
    s1, s3, parity = z.hamming_value, z.cubic_value, z.parity
    parity_position = scheme.n - 1

    if s1 == 0 and s3 == 0:
        if parity == 0:
            return DecodeOutcome(DecodeStatus.CLEAN, (), codeword[:scheme.k].copy(), codeword.copy())
        return _flip(scheme, codeword, [parity_position], DecodeStatus.CORRECTED_SINGLE)
    if s1 == 0:
        return DecodeOutcome(DecodeStatus.UNCORRECTABLE)

    gf = scheme.field
    S1, S3 = gf(s1), gf(s3)
    if S3 == S1 ** 3:
        position = scheme.locators.index(s1) if s1 in scheme.locators else None
        if position is None:
            return DecodeOutcome(DecodeStatus.UNCORRECTABLE)
        if parity == 1:
            return _flip(scheme, codeword, [position], DecodeStatus.CORRECTED_SINGLE)
        return _flip(scheme, codeword, [position, parity_position], DecodeStatus.CORRECTED_DOUBLE)
    if parity == 1:
        return DecodeOutcome(DecodeStatus.UNCORRECTABLE)

    sigma2 = (S3 + S1 ** 3) / S1
    locators = gf(list(scheme.locators))
    roots = np.nonzero(locators * locators + S1 * locators + sigma2 == 0)[0]
    if roots.size != 2:
        return DecodeOutcome(DecodeStatus.UNCORRECTABLE)
    return _flip(scheme, codeword, [int(r) for r in roots], DecodeStatus.CORRECTED_DOUBLE)


def locate_stuck_bits(read_1, read_2_of_inverted):
    """Positions that did not flip when the inverted word was written back."""
    read_1 = np.asarray(read_1, dtype=np.uint8).ravel()
    read_2 = np.asarray(read_2_of_inverted, dtype=np.uint8).ravel()
    if read_1.size != read_2.size:
        raise LengthMismatchError("probe reads differ in length")
    return frozenset(int(i) for i in np.nonzero(read_1 == read_2)[0])


def decode(scheme, codeword, stuck_positions=None):
    """
    Decode according to the scheme's mode.

    In FAECC mode a double-error syndrome is resolved with stuck_positions
    when they are supplied; otherwise DOUBLE_DETECTED is returned so the
    caller can run the probe.
    """
    if scheme.mode is CodeMode.DECTED:
        return decode_dected(scheme, codeword)
    outcome = decode_secded(scheme, codeword)
    if (scheme.mode is CodeMode.FAECC and outcome.status is DecodeStatus.DOUBLE_DETECTED
            and stuck_positions is not None):
        return resolve_double_with_erasure(scheme, codeword, stuck_positions)
    return outcome
