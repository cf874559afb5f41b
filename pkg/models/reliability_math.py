"""
Retention Reliability Analytics

Closed-form and numerically integrated reliability figures for STT-MRAM
arrays: free-layer lifetime, bit/word/array survival, MTTF and FIT, and the
thermal stability factor an array needs to meet a FIT target with or without
ECC and with hard-fault-degraded words.

Units are SI (seconds, meters) except the energy-barrier geometry formulas,
which are evaluated in CGS (erg, emu/cm^3, Oe, cm) and converted at the
boundary.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate, optimize, stats

from models.exceptions import (NonConvergentIntegralError, OutOfRangeError, SttLabError,
                               UnattainableTargetError)

logger = logging.getLogger(__name__)

ATTEMPT_TIME_S = 1e-9
BOLTZMANN_ERG_PER_K = 1.3807e-16
SECONDS_PER_HOUR = 3600.0
HOURS_PER_YEAR = 8760.0
FIT_DEVICE_HOURS = 1e9
MAX_EBN = 700.0

EBN_BRACKET = (10.0, 120.0)
MTTF_REL_TOL = 1e-6
TAIL_FRACTION = 1e-9

# Stream key for sampled fault histograms
HISTOGRAM_STREAM = 0x4849


class Anisotropy(Enum):
    IMA = 'IMA'
    PMA = 'PMA'


class Footprint(Enum):
    ELLIPTIC = 'elliptic'
    RECTANGULAR = 'rectangular'


@dataclass(frozen=True)
class EnergyBarrier:
    """
    Thermal stability factor E_B / (k_B T).

    degenerate marks a geometry whose barrier vanished (IMA with AR = 1);
    yield_failing marks a design computed for a profile that contains words
    with more hard faults than the code can absorb.
    """
    ebn: float
    degenerate: bool = False
    yield_failing: bool = False

    def __post_init__(self):
        if not math.isfinite(self.ebn) or self.ebn < 0:
            raise OutOfRangeError(f"ebn must be finite and >= 0, got {self.ebn}")

    def __float__(self):
        return float(self.ebn)


@dataclass(frozen=True)
class MtjParams:
    """
    Free-layer geometry and magnetics.

    Args:
        width: free-layer width in meters
        aspect_ratio: length / width, >= 1
        thickness: free-layer thickness in meters
        anisotropy: IMA or PMA
        ms: saturation magnetization in emu/cm^3
        hk_perp: perpendicular anisotropy field in Oe (PMA only)
        temperature: kelvin
        footprint: elliptic or rectangular cross-section
    """
    width: float
    aspect_ratio: float
    thickness: float
    anisotropy: Anisotropy
    ms: float
    hk_perp: float = None
    temperature: float = 300.0
    footprint: Footprint = Footprint.ELLIPTIC

    def __post_init__(self):
        if self.width <= 0 or self.thickness <= 0 or self.temperature <= 0:
            raise SttLabError("width, thickness and temperature must be positive")
        if self.aspect_ratio < 1:
            raise SttLabError(f"aspect ratio must be >= 1, got {self.aspect_ratio}")
        if self.ms <= 0:
            raise SttLabError("Ms must be positive")

    @property
    def volume_cm3(self):
        w_cm = self.width * 100.0
        t_cm = self.thickness * 100.0
        if self.footprint is Footprint.ELLIPTIC:
            return math.pi / 4.0 * w_cm ** 2 * self.aspect_ratio * t_cm
        return w_cm ** 2 * self.aspect_ratio * t_cm

    @property
    def thermal_energy_erg(self):
        return BOLTZMANN_ERG_PER_K * self.temperature


@dataclass(frozen=True)
class ArraySpec:
    """
    Array dimensioning and reliability target.

    k data bits and n stored bits per word, s words, m correctable errors per
    word, fit_target in failures per 1e9 device-hours.
    """
    k: int
    n: int
    s: int
    m: int = 0
    fit_target: float = 1.0

    def __post_init__(self):
        if not (self.n >= self.k >= 1):
            raise SttLabError(f"need n >= k >= 1, got k={self.k}, n={self.n}")
        if self.s < 1:
            raise SttLabError("array needs at least one word")
        if not 0 <= self.m <= self.n:
            raise SttLabError(f"need 0 <= m <= n, got m={self.m}")
        if self.fit_target <= 0:
            raise SttLabError("fit_target must be positive")

    @property
    def total_bits(self):
        return self.n * self.s

    @classmethod
    def raw(cls, bits, fit_target=1.0):
        """Unprotected array of `bits` independent cells."""
        return cls(k=1, n=1, s=int(bits), m=0, fit_target=fit_target)

    @classmethod
    def with_bch(cls, size_bits, k, m, deg, fit_target=1.0):
        """
        Array of size_bits data bits split into k-bit words protected by an
        m-error-correcting BCH code over GF(2^deg) plus overall parity
        (m = 0 means no ECC).
        """
        n = k if m == 0 else k + m * deg + 1
        return cls(k=k, n=n, s=int(size_bits) // k, m=m, fit_target=fit_target)


@dataclass(frozen=True)
class HardFaultProfile:
    """Word counts n_j indexed by the number j of hard faults in the word."""
    counts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'counts', tuple(int(c) for c in self.counts))
        if any(c < 0 for c in self.counts):
            raise SttLabError("word counts must be non-negative")

    @classmethod
    def healthy(cls, s):
        return cls((int(s),))

    @property
    def words(self):
        return sum(self.counts)

    @property
    def max_faults(self):
        nonzero = [j for j, c in enumerate(self.counts) if c]
        return nonzero[-1] if nonzero else 0

    def exceeds(self, m):
        """True if some word carries more hard faults than m."""
        return self.max_faults > m

    def check_against(self, spec):
        if self.words != spec.s:
            raise SttLabError(f"profile covers {self.words} words, array has {spec.s}")
        if len(self.counts) - 1 > spec.n:
            raise SttLabError("profile lists more faults per word than bits per word")


def _ebn_value(eb):
    return float(eb.ebn) if isinstance(eb, EnergyBarrier) else float(eb)


def lifetime_seconds(eb):
    """Free-layer lifetime 1e-9 * exp(ebn) in seconds."""
    ebn = _ebn_value(eb)
    if not math.isfinite(ebn) or ebn < 0:
        raise OutOfRangeError(f"ebn must be finite and >= 0, got {ebn}")
    if ebn > MAX_EBN:
        raise OutOfRangeError(f"ebn={ebn} overflows the lifetime exponential")
    return ATTEMPT_TIME_S * math.exp(ebn)


def ebn_for_lifetime(t_life):
    """Inverse of lifetime_seconds."""
    if t_life <= 0:
        raise SttLabError("t_life must be positive")
    return EnergyBarrier(max(0.0, math.log(t_life / ATTEMPT_TIME_S)))


def retention_survival(t, t_life):
    """Probability a single cell still holds its data after t seconds."""
    if t < 0 or t_life <= 0:
        raise SttLabError("need t >= 0 and t_life > 0")
    return math.exp(-t / t_life)


def retention_failure(t, t_life):
    """1 - retention_survival, computed without cancellation."""
    if t < 0 or t_life <= 0:
        raise SttLabError("need t >= 0 and t_life > 0")
    return -math.expm1(-t / t_life)


def ebn_from_geometry(p):
    """
    Thermal stability factor of a free layer from its geometry.

    IMA uses the shape-anisotropy field 4*pi*Ms*t*(AR-1)/(w*AR); PMA uses
    the supplied perpendicular anisotropy field. Both give E_B = Hk*Ms*V/2.
    """
    if p.anisotropy is Anisotropy.IMA:
        w_cm = p.width * 100.0
        t_cm = p.thickness * 100.0
        hk = 4.0 * math.pi * p.ms * t_cm * (p.aspect_ratio - 1.0) / (w_cm * p.aspect_ratio)
    else:
        if p.hk_perp is None:
            raise SttLabError("PMA free layer needs hk_perp")
        hk = p.hk_perp
    e_b = hk * p.ms * p.volume_cm3 / 2.0
    if e_b <= 0:
        logger.warning("Degenerate free-layer geometry: barrier %.3g erg set to zero", e_b)
        return EnergyBarrier(0.0, degenerate=True)
    return EnergyBarrier(e_b / p.thermal_energy_erg)


def solve_hk_for_ebn(p, ebn):
    """Perpendicular anisotropy field (Oe) giving the requested ebn."""
    if p.anisotropy is not Anisotropy.PMA:
        raise SttLabError("only a PMA barrier is set by its anisotropy field")
    return 2.0 * _ebn_value(ebn) * p.thermal_energy_erg / (p.ms * p.volume_cm3)


def fit_to_mttf(fit):
    """MTTF in hours for a failure rate in FIT."""
    if fit <= 0:
        raise SttLabError("FIT must be positive")
    return FIT_DEVICE_HOURS / fit


def mttf_to_fit(mttf_hours):
    """
    Failure rate in FIT for a mean time to failure.

    Args:
        mttf_hours: MTTF in hours

    Returns:
        float: failures per 1e9 device-hours
    """
    if mttf_hours <= 0:
        raise SttLabError("MTTF must be positive")
    return FIT_DEVICE_HOURS / mttf_hours


def mttf_single(t_life):
    """A single exponential cell fails on average after its lifetime."""
    if t_life <= 0:
        raise SttLabError("t_life must be positive")
    return t_life


def mttf_raw_array(t_life, n_bits):
    """First failure among n_bits independent exponential cells."""
    if n_bits < 1:
        raise SttLabError("raw array needs at least one bit")
    return mttf_single(t_life) / n_bits


def word_survival(t, t_life, n, m):
    """
    Probability that an n-bit word with m-error correction is still
    decodable after t seconds of retention exposure.
    """
    if not 0 <= m <= n:
        raise SttLabError(f"need 0 <= m <= n, got m={m}, n={n}")
    if m == n:
        return 1.0
    p_b = retention_failure(t, t_life)
    q = 1.0 - p_b
    return min(1.0, sum(math.comb(n, i) * q ** (n - i) * p_b ** i for i in range(m + 1)))


def retention_tolerance(m, j):
    """Retention errors a word with j hard faults still absorbs under m-error correction."""
    # Words already holding m or more hard faults tolerate no retention error.
    return m - j if j <= m else 0


def _log_word_survival(p_b, healthy_bits, tolerance):
    if healthy_bits <= tolerance:
        return 0.0
    with np.errstate(divide='ignore'):
        return float(np.log1p(-stats.binom.sf(tolerance, healthy_bits, p_b)))


def log_array_survival(u, spec, profile=None):
    """
    Natural log of the array survival at normalized time u = t / t_life.

    Word j of the profile carries j hard faults; retention flips only matter
    on its n - j healthy cells.
    """
    if u < 0:
        raise SttLabError("time must be non-negative")
    profile = profile or HardFaultProfile.healthy(spec.s)
    p_b = -math.expm1(-u)
    total = 0.0
    for j, count in enumerate(profile.counts):
        if count == 0:
            continue
        total += count * _log_word_survival(p_b, spec.n - j, retention_tolerance(spec.m, j))
    return total


@dataclass(frozen=True)
class ArraySurvival:
    """
    Probability that every word is still correctable.

    yield_failing marks a profile with words holding more hard faults than m;
    such words count as tolerating no retention error.
    """
    probability: float
    yield_failing: bool = False

    def __float__(self):
        return self.probability


def array_survival(t, t_life, spec, profile=None):
    """
    Array survival after t seconds of retention exposure.

    Args:
        t: Exposure time in seconds
        t_life: Cell lifetime in seconds
        spec: Array geometry and correction capability
        profile: Hard-fault histogram; all words healthy when omitted

    Returns:
        ArraySurvival: the probability, flagged yield-failing when the profile
            holds words the code cannot absorb

    Raises:
        SttLabError: profile does not cover the array or t_life <= 0
    """
    profile = profile or HardFaultProfile.healthy(spec.s)
    profile.check_against(spec)
    if t_life <= 0:
        raise SttLabError("t_life must be positive")
    yield_failing = profile.exceeds(spec.m)
    if yield_failing:
        logger.warning("Profile has words with more than m=%d hard faults; array is yield-failing",
                       spec.m)
    return ArraySurvival(math.exp(log_array_survival(t / t_life, spec, profile)), yield_failing)


def survival_function(spec, profile=None):
    """Array survival as a function of u = t / t_life."""
    profile = profile or HardFaultProfile.healthy(spec.s)
    profile.check_against(spec)
    return lambda u: math.exp(log_array_survival(u, spec, profile))


def _median_scale(survival, max_steps=2000):
    t = 1.0
    if survival(t) > 0.5:
        for _ in range(max_steps):
            t *= 2.0
            if survival(t) <= 0.5:
                return t
        raise NonConvergentIntegralError("survival never drops below one half")
    for _ in range(max_steps):
        if survival(t / 2.0) > 0.5:
            return t
        t /= 2.0
    raise NonConvergentIntegralError("survival is below one half at every probed time")


def mttf_numeric(survival, t_ref=None, rel_tol=MTTF_REL_TOL, max_doublings=400):
    """
    Mean time to failure as the integral of the survival function.

    The time axis is rescaled by t_ref (by default the survival median) and
    integrated on [0, 1], [1, 2], [2, 4], ... until a segment adds less than
    TAIL_FRACTION of the accumulated mass.
    """
    if t_ref is None:
        t_ref = _median_scale(survival)
    if t_ref <= 0:
        raise SttLabError("t_ref must be positive")

    def scaled(u):
        return survival(u * t_ref)

    quad_kwargs = dict(epsabs=1e-14, epsrel=rel_tol * 1e-2, limit=200)
    total, _ = integrate.quad(scaled, 0.0, 1.0, **quad_kwargs)
    upper = 1.0
    for _ in range(max_doublings):
        piece, _ = integrate.quad(scaled, upper, 2.0 * upper, **quad_kwargs)
        total += piece
        upper *= 2.0
        if piece <= TAIL_FRACTION * total:
            logger.debug("MTTF quadrature converged at u=%g (t_ref=%g)", upper, t_ref)
            return total * t_ref
    raise NonConvergentIntegralError(f"MTTF integral still growing at t={upper * t_ref:g}")


def required_ebn(spec, profile=None, bracket=EBN_BRACKET, rel_tol=1e-4):
    """
    Smallest thermal stability factor whose array MTTF meets the FIT target.

    Survival depends on t only through t / t_life, so the MTTF in units of
    t_life is integrated once and the bisection runs on
    log(lifetime(ebn) * mttf_units / target).
    """
    profile = profile or HardFaultProfile.healthy(spec.s)
    profile.check_against(spec)
    yield_failing = profile.exceeds(spec.m)
    if yield_failing:
        logger.warning("required_ebn: profile exceeds m=%d; result flagged yield-failing", spec.m)

    target_s = fit_to_mttf(spec.fit_target) * SECONDS_PER_HOUR
    mttf_units = mttf_numeric(survival_function(spec, profile))

    def log_ratio(ebn):
        return math.log(ATTEMPT_TIME_S * mttf_units / target_s) + ebn

    low, high = bracket
    if log_ratio(high) < 0:
        raise UnattainableTargetError(
            f"FIT {spec.fit_target} not reachable below ebn={high} (n={spec.n}, s={spec.s}, m={spec.m})")
    if log_ratio(low) >= 0:
        return EnergyBarrier(low, yield_failing=yield_failing)
    # |MTTF/target - 1| < rel_tol holds once |log ratio| < rel_tol.
    root = optimize.bisect(log_ratio, low, high, xtol=rel_tol * 1e-3)
    logger.debug("required_ebn: n=%d s=%d m=%d -> %.6f", spec.n, spec.s, spec.m, root)
    return EnergyBarrier(root, yield_failing=yield_failing)


def expected_fault_histogram(p_defect, spec, sampled=False, mc=None):
    """
    Word counts by number of hard faults for a per-cell defect probability.

    The default returns rounded expected counts with the rounding residual
    assigned to n_0; sampled=True draws one binomial count per word from the
    Monte Carlo stream.
    """
    if not 0.0 <= p_defect <= 1.0:
        raise SttLabError(f"p_defect must lie in [0, 1], got {p_defect}")
    if sampled:
        if mc is None:
            raise SttLabError("sampled histograms need an McConfig")
        per_word = mc.stream(HISTOGRAM_STREAM).binomial(spec.n, p_defect, size=spec.s)
        return HardFaultProfile(tuple(np.bincount(per_word)))

    faulty = [int(round(spec.s * stats.binom.pmf(j, spec.n, p_defect))) for j in range(1, spec.n + 1)]
    residual = spec.s - sum(faulty)
    while residual < 0:
        largest = int(np.argmax(faulty))
        take = min(faulty[largest], -residual)
        faulty[largest] -= take
        residual += take
    counts = [residual] + faulty
    while len(counts) > 1 and counts[-1] == 0:
        counts.pop()
    return HardFaultProfile(tuple(counts))


def analytic_yield(spec, cap, p_defect):
    """
    Probability that every word holds at most `cap` defective cells.

    Args:
        spec: Array geometry; defects are independent across all s * n cells
        cap: Hard faults a word absorbs (0 SECDED, 1 failure-aware SECDED)
        p_defect: Per-cell defect probability

    Returns:
        float: array yield in [0, 1]
    """
    if not 0.0 <= p_defect <= 1.0:
        raise SttLabError(f"p_defect must lie in [0, 1], got {p_defect}")
    with np.errstate(divide='ignore'):
        return float(np.exp(spec.s * np.log(stats.binom.cdf(cap, spec.n, p_defect))))


def percent_ebn_increase(spec, p_defect):
    """Relative increase of the required ebn when defects consume ECC margin."""
    healthy = required_ebn(spec)
    degraded = required_ebn(spec, expected_fault_histogram(p_defect, spec))
    return 100.0 * (degraded.ebn - healthy.ebn) / healthy.ebn


class ArrayReliabilityModel:
    """
    Retention reliability of one array design.

    Bundles an ArraySpec and a hard-fault profile and answers the questions
    the experiments ask of it: survival over time, MTTF/FIT at a given
    barrier, the barrier needed for the FIT target, and how that barrier
    moves with the correction capability.
    """

    def __init__(self, spec, profile=None):
        self.spec = spec
        self.profile = profile or HardFaultProfile.healthy(spec.s)
        self.profile.check_against(spec)

    def survival(self, t, t_life):
        """ArraySurvival after t seconds for cells of lifetime t_life."""
        return array_survival(t, t_life, self.spec, self.profile)

    def mttf_seconds(self, eb):
        return lifetime_seconds(eb) * mttf_numeric(survival_function(self.spec, self.profile))

    def fit(self, eb):
        """
        Array failure rate at a given barrier.

        Args:
            eb: Thermal stability factor (float or EnergyBarrier)

        Returns:
            float: FIT of the whole array
        """
        return mttf_to_fit(self.mttf_seconds(eb) / SECONDS_PER_HOUR)

    def required_ebn(self):
        return required_ebn(self.spec, self.profile)

    def correction_sweep(self, m_values, deg, size_bits=None):
        """
        Required ebn for each correction capability m at fixed data size.

        Returns a list of dicts with the stored word length and the result,
        in the order of m_values.
        """
        size_bits = size_bits or self.spec.k * self.spec.s
        results = []
        for m in m_values:
            spec = ArraySpec.with_bch(size_bits, self.spec.k, m, deg, self.spec.fit_target)
            try:
                eb = required_ebn(spec)
                results.append({'m': m, 'n': spec.n, 'required_ebn': eb.ebn})
            except UnattainableTargetError as e:
                results.append({'m': m, 'n': spec.n, 'required_ebn': float('nan'), 'error': str(e)})
        return results
