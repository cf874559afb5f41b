"""
Fault-Injecting STT-MRAM Array Simulator

A word-addressed array of cells with per-cell lifetimes, stuck-at faults,
write failures and transient sensing noise, driven by an explicit simulated
clock. Reads run the decode path of the array's code, including the
invert-rewrite-read probe for failure-aware SECDED.

The module also hosts the Monte Carlo estimators (FIT, yield, survival) that
serve as the oracle for the closed-form analytics.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from models.ecc_codec import (CodeMode, DecodeOutcome, DecodeStatus, correction_capacity, decode,
                              decode_dected, decode_secded, encode, locate_stuck_bits,
                              resolve_double_with_erasure)
from models.exceptions import (AddressError, ArrayDimensionError, ClockError,
                               LengthMismatchError, OutOfRangeError, SttLabError)
from models.monte_carlo import (BLOCK_SIZE, Estimate, binomial_estimate, mean_estimate,
                                poisson_rate_estimate)
from models.reliability_math import (ATTEMPT_TIME_S, FIT_DEVICE_HOURS, MAX_EBN,
                                     SECONDS_PER_HOUR, HardFaultProfile)

logger = logging.getLogger(__name__)

MAX_CELLS = 1 << 27

# Stream identifiers; the remaining key components are (trial, word/block, counter).
BUILD_STREAM = 1
ACCESS_STREAM = 2
FIT_STREAM = 3
YIELD_STREAM = 4
SURVIVAL_STREAM = 5
WORKLOAD_STREAM = 6

# Upper bound on exponential draws held in memory by the survival oracle.
CHUNK_ELEMENTS = 1 << 22


class StuckAt(IntEnum):
    NONE = -1
    STUCK0 = 0
    STUCK1 = 1


@dataclass(frozen=True)
class CellState:
    value: int
    stuck: StuckAt
    t_life_cell: float
    last_write: float


@dataclass(frozen=True)
class ErrorModel:
    """
    Per-cell error mechanisms.

    Args:
        p_write_fail: probability a cell keeps its old value on a write
        p_read_flip: probability a sensed bit is transiently inverted
        retention: sample a retention flip time on every write
        probe_noise: apply write failures and sensing noise to the probe's
            extra write/read as well
    """
    p_write_fail: float = 0.0
    p_read_flip: float = 0.0
    retention: bool = True
    probe_noise: bool = False

    def __post_init__(self):
        for name in ('p_write_fail', 'p_read_flip'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise SttLabError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class FaultMap:
    """Explicit stuck-at faults as (word, bit, stuck value) triples."""
    faults: tuple = ()

    def __post_init__(self):
        normalized = []
        for word, bit, value in self.faults:
            if int(value) not in (0, 1):
                raise SttLabError(f"stuck value must be 0 or 1, got {value}")
            normalized.append((int(word), int(bit), int(value)))
        object.__setattr__(self, 'faults', tuple(normalized))

    def __len__(self):
        return len(self.faults)

    def __iter__(self):
        return iter(self.faults)


@dataclass(frozen=True, eq=False)
class ReadResult:
    addr: int
    data: np.ndarray
    outcome: DecodeOutcome
    probe_used: bool = False

    @property
    def recovered(self):
        return self.outcome.recovered


@dataclass(frozen=True)
class WriteResult:
    addr: int
    mismatches: int


@dataclass(frozen=True)
class TraceRecord:
    t: float
    addr: int
    op: str
    outcome: str
    probe_used: bool


@dataclass
class ReadStats:
    """Read outcome tallies, grouped into the three read scenarios."""
    reads: int = 0
    clean: int = 0
    corrected_single: int = 0
    corrected_double: int = 0
    double_detected: int = 0
    uncorrectable: int = 0
    probe_reads: int = 0

    def record(self, result):
        self.reads += 1
        setattr(self, result.outcome.status.value, getattr(self, result.outcome.status.value) + 1)
        if result.probe_used:
            self.probe_reads += 1

    @property
    def data_loss(self):
        return self.double_detected + self.uncorrectable

    def scenario_fractions(self):
        if self.reads == 0:
            return {'detect_only': 0.0, 'single_correction': 0.0,
                    'double_correction_probe': 0.0, 'data_loss': 0.0}
        return {
            'detect_only': self.clean / self.reads,
            'single_correction': self.corrected_single / self.reads,
            'double_correction_probe': self.corrected_double / self.reads,
            'data_loss': self.data_loss / self.reads,
        }


class SimArray:
    """
    Simulated array of s words by n cells.

    Cell state is kept column-wise in (s, n) arrays: stored value, stuck-at
    value (-1 for none), lifetime, last write time and the absolute time of
    the next retention flip. Every word access draws from its own stream,
    keyed by (trial, word, access counter).

    A SimArray is single-writer: callers serialize reads and writes.
    """

    def __init__(self, spec, scheme, t_life, stuck, mc, error_model=None, trial=0,
                 record_trace=False):
        self.spec = spec
        self.scheme = scheme
        self.mc = mc
        self.error_model = error_model or ErrorModel()
        self.trial = trial

        self.t_life = t_life
        self.stuck = stuck
        self.value = np.where(stuck >= 0, stuck, 0).astype(np.uint8)
        self.last_write = np.zeros(t_life.shape)
        self.flip_time = np.full(t_life.shape, np.inf)
        self.clock = 0.0

        self._accesses = np.zeros(spec.s, dtype=np.int64)
        self.stats = ReadStats()
        self.trace = [] if record_trace else None

    @property
    def words(self):
        return self.spec.s

    def cell(self, addr, bit):
        """Snapshot of one cell: stored value, stuck-at state, lifetime and last write time."""
        self._check_addr(addr)
        return CellState(int(self.value[addr, bit]), StuckAt(int(self.stuck[addr, bit])),
                         float(self.t_life[addr, bit]), float(self.last_write[addr, bit]))

    def stuck_positions(self, addr):
        self._check_addr(addr)
        return frozenset(int(i) for i in np.nonzero(self.stuck[addr] >= 0)[0])

    # -- fault hooks -------------------------------------------------------

    def inject_fault_map(self, fault_map):
        """
        Pin the listed cells to their stuck values.

        Raises:
            AddressError: a word or bit lies outside the array
        """
        for word, bit, value in fault_map:
            self._check_addr(word)
            if not 0 <= bit < self.spec.n:
                raise AddressError(f"bit {bit} outside word of {self.spec.n} cells")
            self.stuck[word, bit] = value
            self.value[word, bit] = value
            self.flip_time[word, bit] = np.inf
        logger.debug("Injected %d stuck-at faults", len(fault_map))

    def inject_soft_error(self, addr, bit):
        """Invert one stored bit in place, as a retention flip would."""
        self._check_addr(addr)
        if self.stuck[addr, bit] >= 0:
            raise SttLabError(f"cell ({addr}, {bit}) is stuck; a soft error cannot change it")
        self.value[addr, bit] ^= 1

    # -- cell-level mechanics ------------------------------------------------

    def _check_addr(self, addr):
        if not 0 <= addr < self.spec.s:
            raise AddressError(f"word address {addr} outside 0..{self.spec.s - 1}")

    def _advance(self, t_now):
        if t_now < self.clock:
            raise ClockError(f"t={t_now} is before the array clock {self.clock}")
        self.clock = float(t_now)

    def _rng(self, addr):
        key = (ACCESS_STREAM, self.trial, addr, int(self._accesses[addr]))
        self._accesses[addr] += 1
        return self.mc.stream(*key)

    def _age(self, addr, t_now):
        due = self.flip_time[addr] <= t_now
        if due.any():
            self.value[addr, due] ^= 1
            self.flip_time[addr, due] = np.inf

    def _store(self, addr, bits, t_now, rng, noisy=True):
        n = self.spec.n
        pinned = self.stuck[addr] >= 0
        new = np.asarray(bits, dtype=np.uint8).copy()
        if noisy and self.error_model.p_write_fail > 0:
            failed = rng.random(n) < self.error_model.p_write_fail
            new = np.where(failed, self.value[addr], new)
        new = np.where(pinned, self.stuck[addr], new).astype(np.uint8)
        self.value[addr] = new
        self.last_write[addr] = t_now
        if self.error_model.retention:
            flips = t_now + rng.exponential(self.t_life[addr])
            self.flip_time[addr] = np.where(pinned, np.inf, flips)
        else:
            self.flip_time[addr] = np.inf

    def _sense(self, addr, rng, noisy=True):
        out = self.value[addr].copy()
        if noisy and self.error_model.p_read_flip > 0:
            flips = (rng.random(self.spec.n) < self.error_model.p_read_flip) & (self.stuck[addr] < 0)
            out ^= flips.astype(np.uint8)
        return out

    def _log(self, t, addr, op, outcome='', probe_used=False):
        if self.trace is not None:
            self.trace.append(TraceRecord(float(t), int(addr), op, outcome, probe_used))

    # -- word operations -----------------------------------------------------

    def write_word(self, addr, data, t_now):
        """Encode data and store the codeword at t_now."""
        self._check_addr(addr)
        self._advance(t_now)
        codeword = encode(self.scheme, data)
        rng = self._rng(addr)
        self._age(addr, t_now)
        self._store(addr, codeword, t_now, rng)
        result = WriteResult(addr, int((self.value[addr] != codeword).sum()))
        self._log(t_now, addr, 'write', f"mismatches={result.mismatches}")
        return result

    def _raw_read(self, addr, t_now):
        self._check_addr(addr)
        self._advance(t_now)
        rng = self._rng(addr)
        self._age(addr, t_now)
        return self._sense(addr, rng), rng

    def raw_read(self, addr, t_now):
        """The n sensed bits of a word, without decoding."""
        word, _ = self._raw_read(addr, t_now)
        self._log(t_now, addr, 'raw_read')
        return word

    def faecc_read(self, addr, t_now):
        """
        Read with the failure-aware protocol.

        A double-error syndrome triggers the probe: the inverted word is
        written to the same line and read back, cells that did not flip are
        stuck, and the erasure resolver picks the candidate touching them.
        The line is then rewritten with the corrected codeword, or with the
        first read if the word stays uncorrectable.
        """
        if self.scheme.mode is not CodeMode.FAECC:
            raise SttLabError(f"faecc_read needs a FAECC scheme, array uses {self.scheme.mode.value}")
        read_1, rng = self._raw_read(addr, t_now)
        outcome = decode_secded(self.scheme, read_1)
        probe_used = False
        if outcome.status is DecodeStatus.DOUBLE_DETECTED:
            probe_used = True
            noisy = self.error_model.probe_noise
            self._store(addr, 1 - read_1, t_now, rng, noisy=noisy)
            read_2 = self._sense(addr, rng, noisy=noisy)
            stuck = locate_stuck_bits(read_1, read_2)
            outcome = resolve_double_with_erasure(self.scheme, read_1, stuck)
            restore = outcome.codeword if outcome.recovered else read_1
            self._store(addr, restore, t_now, rng, noisy=noisy)
        return self._finish_read(addr, t_now, outcome, probe_used)

    def read_word(self, addr, t_now):
        """Read and decode a word according to the array's code."""
        mode = self.scheme.mode
        if mode is CodeMode.FAECC:
            return self.faecc_read(addr, t_now)
        word, _ = self._raw_read(addr, t_now)
        if mode is CodeMode.DECTED:
            outcome = decode_dected(self.scheme, word)
        else:
            outcome = decode_secded(self.scheme, word)
        return self._finish_read(addr, t_now, outcome, False)

    def _finish_read(self, addr, t_now, outcome, probe_used):
        result = ReadResult(addr, outcome.data, outcome, probe_used)
        self.stats.record(result)
        self._log(t_now, addr, 'read', outcome.status.value, probe_used)
        return result


@dataclass(frozen=True)
class ArrayTemplate:
    """Everything needed to build independent copies of an array design."""
    spec: object
    scheme: object
    ebn_nominal: float
    p_defect: float = 0.0


def _check_dimensions(spec, scheme):
    if spec.n != scheme.n or spec.k != scheme.k:
        raise LengthMismatchError(
            f"array words are ({spec.k},{spec.n}) but the code is ({scheme.k},{scheme.n})")
    if spec.s * spec.n > MAX_CELLS:
        raise ArrayDimensionError(f"{spec.s} x {spec.n} cells exceeds the {MAX_CELLS} cell limit")


def _word_blocks(s):
    return [(b, b * BLOCK_SIZE, min(s, (b + 1) * BLOCK_SIZE)) for b in range(math.ceil(s / BLOCK_SIZE))]


def _sample_cells(rng, rows, n, ebn_nominal, sigma_fraction, p_defect):
    ebn = rng.normal(ebn_nominal, sigma_fraction * ebn_nominal, size=(rows, n))
    t_life = ATTEMPT_TIME_S * np.exp(np.clip(ebn, 1.0, MAX_EBN))
    stuck = np.full((rows, n), -1, dtype=np.int8)
    if p_defect > 0:
        defective = rng.random((rows, n)) < p_defect
        values = rng.integers(0, 2, size=(rows, n), dtype=np.int8)
        stuck = np.where(defective, values, stuck).astype(np.int8)
    return t_life, stuck


def build_array(spec, scheme, ebn_nominal, mc, error_model=None, p_defect=0.0, fault_map=None,
                trial=0, record_trace=False):
    """
    Build a simulated array with varied per-cell lifetimes.

    Each cell's ebn is drawn from Normal(ebn_nominal, sigma_fraction *
    ebn_nominal), clipped at 1, and turned into a lifetime. Stuck cells come
    from p_defect and/or an explicit fault map.

    Raises:
        ArrayDimensionError: more cells than MAX_CELLS
        LengthMismatchError: spec and scheme disagree on word geometry
    """
    _check_dimensions(spec, scheme)
    if not 0.0 <= p_defect <= 1.0:
        raise SttLabError(f"p_defect must lie in [0, 1], got {p_defect}")
    t_life = np.empty((spec.s, spec.n))
    stuck = np.empty((spec.s, spec.n), dtype=np.int8)
    for block, start, stop in _word_blocks(spec.s):
        rng = mc.stream(BUILD_STREAM, trial, block)
        t_life[start:stop], stuck[start:stop] = _sample_cells(
            rng, stop - start, spec.n, ebn_nominal, mc.sigma_fraction, p_defect)
    arr = SimArray(spec, scheme, t_life, stuck, mc, error_model, trial, record_trace)
    if fault_map is not None:
        arr.inject_fault_map(fault_map)
    logger.debug("Built %d x %d array (ebn=%.2f, defects=%d)", spec.s, spec.n, ebn_nominal,
                 int((arr.stuck >= 0).sum()))
    return arr


def _first_failure_time(template, mc, trial):
    """Time at which the first word of one sampled array becomes uncorrectable."""
    spec = template.spec
    cap = correction_capacity(template.scheme.mode)
    earliest = np.inf
    for block, start, stop in _word_blocks(spec.s):
        rng = mc.stream(FIT_STREAM, trial, block)
        t_life, stuck = _sample_cells(rng, stop - start, spec.n, template.ebn_nominal,
                                      mc.sigma_fraction, template.p_defect)
        flips = rng.exponential(t_life)
        hard = stuck >= 0
        flips[hard] = np.inf
        flips.sort(axis=1)
        # A word dies at its (allowed + 1)-th retention flip.
        allowed = np.minimum(cap.max_soft, cap.max_errors - hard.sum(axis=1))
        index = np.clip(allowed, 0, spec.n - 1)[:, None]
        fail = np.take_along_axis(flips, index, axis=1)[:, 0]
        fail = np.where(allowed < 0, 0.0, np.where(allowed >= spec.n, np.inf, fail))
        earliest = min(earliest, float(fail.min()))
    return earliest


def measure_fit(template, mc, horizon=None):
    """
    Monte Carlo FIT of an array design.

    Without a horizon every sampled array is followed to its first
    uncorrectable word and FIT = 1e9 / mean time-to-failure in hours, with a
    CLT interval. With a horizon (seconds) the failure rate is estimated
    from failures observed before it; zero failures give a one-sided bound.
    """
    _check_dimensions(template.spec, template.scheme)

    def run_block(block, start, stop):
        return np.array([_first_failure_time(template, mc, trial) for trial in range(start, stop)])

    hours = np.concatenate(mc.map_blocks(run_block)) / SECONDS_PER_HOUR
    if horizon is None:
        if not np.isfinite(hours).all():
            raise OutOfRangeError("some sampled arrays never fail; pass a horizon")
        mean = mean_estimate(hours)
        if mean.value <= 0:
            raise OutOfRangeError("every sampled array is uncorrectable from the start")
        high = FIT_DEVICE_HOURS / mean.low if mean.low > 0 else np.inf
        estimate = Estimate(FIT_DEVICE_HOURS / mean.value, FIT_DEVICE_HOURS / mean.high, high,
                            mean.trials)
    else:
        horizon_h = horizon / SECONDS_PER_HOUR
        events = int((hours <= horizon_h).sum())
        rate = poisson_rate_estimate(events, float(np.minimum(hours, horizon_h).sum()))
        estimate = Estimate(rate.value * FIT_DEVICE_HOURS, rate.low * FIT_DEVICE_HOURS,
                            rate.high * FIT_DEVICE_HOURS, mc.trials, rate.one_sided)
        if rate.one_sided:
            logger.warning("No failures before the horizon; FIT is a one-sided upper bound")
    logger.info("Measured FIT %.4g [%.4g, %.4g] over %d arrays",
                estimate.value, estimate.low, estimate.high, mc.trials)
    return estimate


def measure_yield(spec, scheme, p_defect, mc):
    """
    Fraction of sampled arrays whose every word holds no more defective
    cells than the code absorbs as hard faults.

    Defect counts depend only on (seed, trial), so different schemes
    evaluated with the same McConfig see identical arrays.
    """
    if not 0.0 <= p_defect <= 1.0:
        raise SttLabError(f"p_defect must lie in [0, 1], got {p_defect}")
    cap = correction_capacity(getattr(scheme, 'mode', scheme)).max_hard

    def run_block(block, start, stop):
        good = 0
        for trial in range(start, stop):
            counts = mc.stream(YIELD_STREAM, trial).binomial(spec.n, p_defect, size=spec.s)
            good += int(counts.max() <= cap)
        return good

    return binomial_estimate(sum(mc.map_blocks(run_block)), mc.trials)


def _pattern_verdicts(scheme, codeword, data, errors, cache):
    """
    Per-word decode success for a (trials, words, n) boolean error tensor.

    Error-free words pass without decoding; every distinct nonzero pattern
    is decoded once and its verdict kept in cache.
    """
    flat = errors.reshape(-1, scheme.n)
    ok = np.ones(flat.shape[0], dtype=bool)
    dirty = np.flatnonzero(flat.any(axis=1))
    if dirty.size:
        patterns, inverse = np.unique(np.packbits(flat[dirty], axis=1), axis=0, return_inverse=True)
        verdict = np.empty(len(patterns), dtype=bool)
        for i, packed in enumerate(patterns):
            key = packed.tobytes()
            if key not in cache:
                pattern = np.unpackbits(packed, count=scheme.n)
                outcome = decode(scheme, codeword ^ pattern)
                cache[key] = outcome.recovered and np.array_equal(outcome.data, data)
            verdict[i] = cache[key]
        ok[dirty] = verdict[inverse.reshape(-1)]
    return ok.reshape(errors.shape[:2]).all(axis=1)


def estimate_array_survival(spec, scheme, profile, u, mc):
    """
    Monte Carlo array survival at normalized time u = t / t_life.

    Every sampled word is a codeword of `scheme` whose j stuck cells sit at
    random positions and always read wrong; each healthy cell flips when its
    exponential lifetime (in units of t_life) ends before u. A word survives
    when the decoder hands back the stored data, and the array survives when
    every word does.

    Args:
        spec: Array geometry; spec.m must equal the code's soft-error capacity
        scheme: Code the words are stored with
        profile: Hard-fault histogram; all words healthy when None
        u: Exposure in units of the cell lifetime
        mc: Monte Carlo configuration

    Returns:
        Estimate: surviving fraction of the sampled arrays

    Raises:
        LengthMismatchError: spec and scheme disagree on word geometry
        SttLabError: the code corrects a different number of errors than spec.m
    """
    _check_dimensions(spec, scheme)
    if scheme.capacity.max_soft != spec.m:
        raise SttLabError(f"{scheme!r} corrects {scheme.capacity.max_soft} errors, spec has m={spec.m}")
    if u < 0:
        raise SttLabError("time must be non-negative")
    profile = profile or HardFaultProfile.healthy(spec.s)
    profile.check_against(spec)
    groups = [(j, count) for j, count in enumerate(profile.counts) if count]

    def run_block(block, start, stop):
        rng = mc.stream(SURVIVAL_STREAM, block)
        data = rng.integers(0, 2, spec.k, dtype=np.uint8)
        codeword = encode(scheme, data)
        cache = {}
        trials = stop - start
        alive = np.ones(trials, dtype=bool)
        for j, count in groups:
            chunk = max(1, CHUNK_ELEMENTS // (spec.n * count))
            for lo in range(0, trials, chunk):
                hi = min(trials, lo + chunk)
                errors = rng.exponential(1.0, size=(hi - lo, count, spec.n)) <= u
                if j:
                    stuck = np.argsort(rng.random((hi - lo, count, spec.n)), axis=2)[..., :j]
                    np.put_along_axis(errors, stuck, True, axis=2)
                alive[lo:hi] &= _pattern_verdicts(scheme, codeword, data, errors, cache)
        return int(alive.sum())

    return binomial_estimate(sum(mc.map_blocks(run_block)), mc.trials)


@dataclass
class WorkloadReport:
    words: int
    age_seconds: float
    stats: ReadStats
    silent_corruptions: int = 0
    trace: list = field(default_factory=list)

    @property
    def data_loss(self):
        return self.stats.data_loss


def run_workload(arr, age_seconds, mc):
    """Write every word with random data, age the array, then read every word back."""
    rng = mc.stream(WORKLOAD_STREAM, arr.trial)
    data = rng.integers(0, 2, size=(arr.words, arr.spec.k), dtype=np.uint8)
    start = arr.clock
    for addr in range(arr.words):
        arr.write_word(addr, data[addr], start)
    silent = 0
    for addr in range(arr.words):
        result = arr.read_word(addr, start + age_seconds)
        if result.recovered and not np.array_equal(result.data, data[addr]):
            silent += 1
    if silent:
        logger.warning("%d words decoded to wrong data", silent)
    return WorkloadReport(arr.words, age_seconds, arr.stats, silent, list(arr.trace or []))
