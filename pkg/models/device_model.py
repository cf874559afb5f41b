"""
Macrospin Device Model and Bit-Cell Failure Estimation

This module provides:
- LLGS macrospin integration with a Slonczewski spin-transfer torque term
- Critical switching current density for a given write pulse width
- A parametric MTJ resistance model and a compact access-transistor model
- Load-line operating points and Monte Carlo estimators for write,
  read-decision and read-disturb failure probabilities

Magnetic quantities use CGS (Oe, emu/cm^3); currents, voltages and lengths
are SI.
"""

import functools
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy import integrate, optimize, stats

from models.exceptions import (CriticalCurrentError, DegenerateDistributionError,
                               SpinTorquePoleError, StepSizeError, SttLabError)
from models.monte_carlo import Z95, Estimate, binomial_estimate
from models.reliability_math import BOLTZMANN_ERG_PER_K

logger = logging.getLogger(__name__)

HBAR = 1.054571817e-34       # J s
Q_E = 1.602176634e-19        # C
TESLA_TO_OE = 1e4

DEFAULT_DT = 1e-12
NORM_DRIFT_LIMIT = 1e-3
SWITCH_THRESHOLD = -0.9
J_BRACKET = (1e9, 1e13)      # A/m^2
LOAD_LINE_ITERATIONS = 64

DEVICE_STREAM = 0x4445
# Columns of the variation draw: t_MgO, area, transistor width, Vth, t_FL.
N_VARIATIONS = 5


class TorqueForm(Enum):
    PRINTED = 'printed'
    CUBIC = 'cubic'


class MtjState(Enum):
    P = 'P'
    AP = 'AP'


def _torque_coefficient(polarization, form):
    exponent = 2 if TorqueForm(form) is TorqueForm.PRINTED else 3
    return (1.0 + polarization) ** exponent / (4.0 * polarization ** 1.5)


def g_theta(cos_theta, polarization, form=TorqueForm.PRINTED):
    """
    Angular efficiency of the spin torque.

    'printed' uses a (1+P)^2 numerator, 'cubic' the (1+P)^3 Slonczewski
    form; both evaluate [-4 + c*(3 + cos theta)]^-1.
    """
    c = _torque_coefficient(polarization, form)
    return 1.0 / (-4.0 + c * (3.0 + np.asarray(cos_theta, dtype=float)))


def torque_pole(polarization, form=TorqueForm.PRINTED):
    """Angle in [0, pi] where g(theta) diverges, or None."""
    c = _torque_coefficient(polarization, form)
    cos_pole = 4.0 / c - 3.0
    if -1.0 <= cos_pole <= 1.0:
        return math.acos(cos_pole)
    return None


@dataclass(frozen=True)
class LlgsParams:
    """
    Free-layer macrospin parameters.

    Args:
        ms: saturation magnetization, emu/cm^3
        alpha: Gilbert damping
        gamma: gyromagnetic ratio, rad/(s Oe)
        polarization: spin polarization, 0 < P < 1
        t_fl: free-layer thickness, m
        hk_eff: effective anisotropy field, Oe
        easy_axis: unit vector; the pinned layer points along it
        temperature: K
        diameter: free-layer diameter, m (circular footprint)
        torque_form: 'printed' or 'cubic' angular factor
    """
    ms: float = 850.0
    alpha: float = 0.028
    gamma: float = 1.76e7
    polarization: float = 0.3
    t_fl: float = 1e-9
    hk_eff: float = 1515.0
    easy_axis: tuple = (0.0, 0.0, 1.0)
    temperature: float = 300.0
    diameter: float = 64e-9
    torque_form: TorqueForm = TorqueForm.PRINTED

    def __post_init__(self):
        if not 0.0 < self.polarization < 1.0:
            raise SttLabError(f"polarization must lie in (0, 1), got {self.polarization}")
        if self.alpha < 0:
            raise SttLabError(f"alpha must be non-negative, got {self.alpha}")
        if self.ms <= 0 or self.t_fl <= 0 or self.hk_eff <= 0 or self.diameter <= 0:
            raise SttLabError("Ms, t_FL, Hk_eff and diameter must be positive")
        axis = tuple(float(x) for x in self.easy_axis)
        if len(axis) != 3 or abs(math.sqrt(sum(x * x for x in axis)) - 1.0) > 1e-9:
            raise SttLabError(f"easy axis must be a unit 3-vector, got {self.easy_axis}")
        object.__setattr__(self, 'easy_axis', axis)
        object.__setattr__(self, 'torque_form', TorqueForm(self.torque_form))

    @property
    def volume_cm3(self):
        d_cm = self.diameter * 100.0
        return math.pi / 4.0 * d_cm ** 2 * self.t_fl * 100.0

    @property
    def ebn(self):
        return self.hk_eff * self.ms * self.volume_cm3 / (2.0 * BOLTZMANN_ERG_PER_K * self.temperature)

    @classmethod
    def for_ebn(cls, ebn, **kwargs):
        """Parameters whose anisotropy field gives the requested barrier."""
        base = cls(**kwargs)
        hk = 2.0 * ebn * BOLTZMANN_ERG_PER_K * base.temperature / (base.ms * base.volume_cm3)
        return replace(base, hk_eff=hk)

    def a_j_per_density(self):
        """Spin-torque field in Oe per A/m^2, before the angular factor."""
        ms_si = self.ms * 1e3
        return TESLA_TO_OE * HBAR / (2.0 * Q_E * ms_si * self.t_fl)

    def check_torque(self):
        pole = torque_pole(self.polarization, self.torque_form)
        if pole is not None:
            raise SpinTorquePoleError(
                f"{self.torque_form.value} g(theta) diverges at {math.degrees(pole):.1f} deg "
                f"for P={self.polarization}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    m: np.ndarray

    @property
    def final(self):
        return self.m[-1]

    def easy_axis_projection(self, axis):
        """m . axis at every sample; +1 parallel, -1 reversed."""
        return self.m @ np.asarray(axis)


def magnetic_energy(p, m):
    """Uniaxial anisotropy energy density, erg/cm^3, for unit vectors m."""
    projection = np.asarray(m) @ np.asarray(p.easy_axis)
    return -0.5 * p.hk_eff * p.ms * projection ** 2


def _llgs_rate(m, p, axis, a_j_base):
    field = p.hk_eff * (m @ axis) * axis
    torque = p.gamma * np.cross(field, m)
    if a_j_base:
        a_j = a_j_base * g_theta(m @ axis, p.polarization, p.torque_form)
        torque = torque + p.gamma * a_j * np.cross(m, np.cross(m, axis))
    return (torque + p.alpha * np.cross(m, torque)) / (1.0 + p.alpha ** 2)


def llgs_simulate(p, m0, current_density, duration, dt=DEFAULT_DT, sample_every=10,
                  stop_below=None):
    """
    Integrate the LLGS equation with RK4 and renormalization.

    The Gilbert term is moved to the explicit side, giving
    dm/dt = (T + alpha m x T) / (1 + alpha^2) with T the precession plus
    spin-torque rate. Samples are emitted every `sample_every` steps and at
    the end; with stop_below set, integration ends as soon as the easy-axis
    projection falls below it.

    Raises:
        StepSizeError: |m| drifted by more than 1e-3 within one step
        SpinTorquePoleError: current applied with a divergent g(theta)
    """
    m = np.asarray(m0, dtype=float)
    if abs(np.linalg.norm(m) - 1.0) > 1e-9:
        raise SttLabError("m0 must be a unit vector")
    if dt <= 0 or duration < 0:
        raise SttLabError("need dt > 0 and duration >= 0")
    if current_density:
        p.check_torque()
    axis = np.asarray(p.easy_axis)
    a_j_base = p.a_j_per_density() * current_density
    n_steps = int(round(duration / dt))

    times, samples = [0.0], [m.copy()]
    for step in range(1, n_steps + 1):
        k1 = _llgs_rate(m, p, axis, a_j_base)
        k2 = _llgs_rate(m + 0.5 * dt * k1, p, axis, a_j_base)
        k3 = _llgs_rate(m + 0.5 * dt * k2, p, axis, a_j_base)
        k4 = _llgs_rate(m + dt * k3, p, axis, a_j_base)
        m = m + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        norm = np.linalg.norm(m)
        if abs(norm - 1.0) > NORM_DRIFT_LIMIT:
            raise StepSizeError(f"|m| drifted to {norm:.6f} at step {step}; reduce dt={dt:g}")
        m = m / norm
        done = stop_below is not None and m @ axis < stop_below
        if step % sample_every == 0 or step == n_steps or done:
            times.append(step * dt)
            samples.append(m.copy())
        if done:
            break
    return Trajectory(np.array(times), np.array(samples))


@dataclass(frozen=True, eq=False)
class ThermalAngleDistribution:
    """Initial tilt angle density sin(theta) exp(-ebn sin^2 theta) on [0, pi/2]."""
    theta: np.ndarray
    cdf: np.ndarray

    @property
    def median(self):
        return float(np.interp(0.5, self.cdf, self.theta))

    def sample(self, rng, size=None):
        return np.interp(rng.random(size), self.cdf, self.theta)


@functools.lru_cache(maxsize=32)
def thermal_angle_distribution(ebn, points=4001):
    if ebn < 0:
        raise SttLabError("ebn must be non-negative")
    theta = np.linspace(0.0, math.pi / 2.0, points)
    density = np.sin(theta) * np.exp(-ebn * np.sin(theta) ** 2)
    cdf = integrate.cumulative_trapezoid(density, theta, initial=0.0)
    return ThermalAngleDistribution(theta, cdf / cdf[-1])


def tilted_state(axis, theta):
    """Unit vector tilted by theta away from axis."""
    axis = np.asarray(axis, dtype=float)
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    perpendicular = np.cross(axis, helper)
    perpendicular /= np.linalg.norm(perpendicular)
    return math.cos(theta) * axis + math.sin(theta) * perpendicular


@functools.lru_cache(maxsize=64)
def critical_current_density(p, pulse_width, dt=DEFAULT_DT, bracket=J_BRACKET, rel_tol=0.01):
    """
    Smallest current density (A/m^2) that reverses the free layer within
    pulse_width, starting from the median thermal tilt.

    The drive is doubled from the bottom of the bracket until the layer
    switches, then bisected on log J; a run counts as switched once the
    easy-axis projection drops below -0.9. Drives above 2 J_c are never
    simulated.

    Raises:
        CriticalCurrentError: no switching at the top of the bracket
    """
    p.check_torque()
    m0 = tilted_state(p.easy_axis, thermal_angle_distribution(p.ebn).median)

    def switches(j):
        trajectory = llgs_simulate(p, m0, j, pulse_width, dt, sample_every=10 ** 9,
                                   stop_below=SWITCH_THRESHOLD)
        return trajectory.easy_axis_projection(p.easy_axis)[-1] < SWITCH_THRESHOLD

    low, top = bracket
    if switches(low):
        return low
    while True:
        high = min(2.0 * low, top)
        if switches(high):
            break
        if high >= top:
            raise CriticalCurrentError(f"no switching within {pulse_width:g} s at J={top:g} A/m^2")
        low = high
    while high / low - 1.0 > rel_tol:
        mid = math.sqrt(low * high)
        if switches(mid):
            high = mid
        else:
            low = mid
    logger.debug("J_c(%.3g s, Hk=%.1f Oe, alpha=%.3g) = %.4g A/m^2",
                 pulse_width, p.hk_eff, p.alpha, high)
    return high


@dataclass(frozen=True)
class MtjElectrical:
    """
    Parametric MTJ resistance.

    RA(t_MgO) = ra_p * exp(kappa * (t_MgO - t_ref)), R_P = RA / area and
    R_AP = R_P * (1 + tmr0).

    Args:
        ra_p: resistance-area product at t_ref, Ohm um^2
        kappa: exponential RA slope, 1/nm
        tmr0: tunneling magnetoresistance ratio
        area: junction area, m^2
        t_mgo: oxide thickness, m
        t_ref: reference thickness for ra_p, m
    """
    ra_p: float = 5.0
    kappa: float = 4.5
    tmr0: float = 1.5
    area: float = math.pi / 4.0 * (64e-9) ** 2
    t_mgo: float = 1e-9
    t_ref: float = 1e-9

    def __post_init__(self):
        if min(self.ra_p, self.kappa, self.tmr0, self.area, self.t_mgo, self.t_ref) <= 0:
            raise SttLabError("MTJ electrical parameters must all be positive")

    def resistance(self, state, t_mgo=None, area=None):
        """
        Junction resistance in ohms.

        Args:
            state: MtjState.P or MtjState.AP
            t_mgo: Oxide thickness in meters, scalar or per-sample array
            area: Junction area in m^2, scalar or per-sample array

        Returns:
            Resistance with the broadcast shape of t_mgo and area
        """
        t_mgo = self.t_mgo if t_mgo is None else np.asarray(t_mgo)
        area = self.area if area is None else np.asarray(area)
        ra = self.ra_p * np.exp(self.kappa * (t_mgo - self.t_ref) * 1e9)
        r_p = ra / (area * 1e12)
        return r_p * (1.0 + self.tmr0) if MtjState(state) is MtjState.AP else r_p


@dataclass(frozen=True)
class TransistorModel:
    """
    Alpha-power access transistor with the gate held at v_gate.

    I_sat = k_gain * W * (Vgs - Vth)^alpha_sat * (1 + lam * Vds) above
    V_dsat = k_vdsat * (Vgs - Vth)^(alpha_sat / 2); below it the current
    follows I_sat * (2 - x) * x with x = Vds / V_dsat.
    """
    vth: float = 0.35
    k_gain: float = 1800.0
    alpha_sat: float = 1.3
    width: float = 300e-9
    lam: float = 0.05
    k_vdsat: float = 0.7
    v_gate: float = 1.0

    def __post_init__(self):
        if self.width <= 0 or self.k_gain <= 0:
            raise SttLabError("transistor width and gain must be positive")
        if self.alpha_sat <= 0 or self.k_vdsat <= 0 or self.lam < 0:
            raise SttLabError("invalid alpha-power model coefficients")

    def drain_current(self, vds, width=None, vth=None):
        """Drain current in amperes; width and vth override the nominal device per sample."""
        width = self.width if width is None else np.asarray(width)
        vth = self.vth if vth is None else np.asarray(vth)
        vds = np.maximum(np.asarray(vds, dtype=float), 0.0)
        overdrive = np.maximum(self.v_gate - vth, 0.0)
        i_sat = self.k_gain * width * overdrive ** self.alpha_sat * (1.0 + self.lam * vds)
        v_dsat = self.k_vdsat * overdrive ** (self.alpha_sat / 2.0)
        with np.errstate(divide='ignore', invalid='ignore'):
            x = np.where(v_dsat > 0, np.minimum(vds / v_dsat, 1.0), 1.0)
        return i_sat * (2.0 - x) * x


@dataclass(frozen=True)
class OperatingPoint:
    v_mtj: object
    current: object


def solve_load_line(tr, resistance, v_bias, width=None, vth=None):
    """
    Vectorized load-line intersection I_T(V_bias - V) = V / R on [0, V_bias].

    The difference is strictly decreasing in V, so bisection converges to
    the unique root; the current is taken from the transistor side, which
    stays finite for R -> 0.
    """
    resistance = np.asarray(resistance, dtype=float)
    shape = np.broadcast_shapes(resistance.shape, np.shape(width) if width is not None else (),
                                np.shape(vth) if vth is not None else ())
    low = np.zeros(shape)
    high = np.full(shape, float(v_bias))
    with np.errstate(divide='ignore', invalid='ignore'):
        for _ in range(LOAD_LINE_ITERATIONS):
            mid = 0.5 * (low + high)
            excess = tr.drain_current(v_bias - mid, width, vth) - np.where(
                resistance > 0, mid / resistance, np.inf)
            low = np.where(excess > 0, mid, low)
            high = np.where(excess > 0, high, mid)
    v_mtj = 0.5 * (low + high)
    return OperatingPoint(v_mtj, tr.drain_current(v_bias - v_mtj, width, vth))


def load_line_operating_point(tr, mtj, state, v_bias):
    """MTJ voltage and cell current of the nominal bit-cell."""
    if v_bias < 0:
        raise SttLabError("bias voltage must be non-negative")
    point = solve_load_line(tr, mtj.resistance(state), v_bias)
    return OperatingPoint(float(point.v_mtj), float(point.current))


@dataclass(frozen=True, eq=False)
class DeviceSample:
    t_mgo: np.ndarray
    area: np.ndarray
    width: np.ndarray
    vth: np.ndarray
    t_fl: np.ndarray


def sample_variations(tr, mtj, mc, t_fl=1.0):
    """
    Gaussian process variations at relative sigma mc.sigma_fraction.

    Draws depend only on (seed, block), so every sweep point and every
    failure mechanism sees the same population of bit-cells.
    """
    def run_block(block, start, stop):
        return mc.stream(DEVICE_STREAM, block).standard_normal((stop - start, N_VARIATIONS))

    z = np.concatenate(mc.map_blocks(run_block))
    s = mc.sigma_fraction
    return DeviceSample(mtj.t_mgo * (1 + s * z[:, 0]), mtj.area * (1 + s * z[:, 1]),
                        tr.width * (1 + s * z[:, 2]), tr.vth * (1 + s * z[:, 3]),
                        t_fl * (1 + s * z[:, 4]))


def _tail_estimate(margins, tail_model):
    """P(margin < 0) from sampled margins, counted or from a fitted normal."""
    margins = np.asarray(margins, dtype=float)
    n = margins.size
    if tail_model == 'empirical':
        return binomial_estimate(int((margins < 0).sum()), n)
    mu = float(margins.mean())
    sd = float(margins.std(ddof=1)) if n > 1 else 0.0
    if sd == 0.0:
        value = 1.0 if mu < 0 else (0.5 if mu == 0 else 0.0)
        return Estimate(value, value, value, n)
    z = mu / sd
    shift = Z95 / math.sqrt(n)
    return Estimate(float(stats.norm.sf(z)), float(stats.norm.sf(z + shift)),
                    float(stats.norm.sf(z - shift)), n)


def write_failure_probability(tr, mtj_nominal, p, v_dd, pulse_width, mc, dt=DEFAULT_DT):
    """
    Probability that a P -> AP write does not complete within pulse_width.

    A sampled bit-cell fails when its load-line current density falls below
    the critical density, which scales with the sampled free-layer thickness.
    """
    j_c = critical_current_density(p, pulse_width, dt)
    cells = sample_variations(tr, mtj_nominal, mc, p.t_fl)
    resistance = mtj_nominal.resistance(MtjState.P, cells.t_mgo, cells.area)
    point = solve_load_line(tr, resistance, v_dd, cells.width, cells.vth)
    j_write = point.current / cells.area
    margins = np.log(j_write) - np.log(j_c * cells.t_fl / p.t_fl)
    estimate = _tail_estimate(margins, mc.tail_model)
    logger.info("Write failure W=%.0f nm, %.3g s: %.4g", tr.width * 1e9, pulse_width, estimate.value)
    return estimate


@dataclass(frozen=True)
class ReadDecision:
    probability: float
    i_ref_opt: float
    grid_probability: float
    grid_i_ref: float
    grid_spacing: float
    low: float
    high: float


def _below(x, mu, sd):
    if sd == 0.0:
        return float(mu < x)
    return float(stats.norm.cdf(x, mu, sd))


def _above(x, mu, sd):
    if sd == 0.0:
        return float(mu > x)
    return float(stats.norm.sf(x, mu, sd))


def _spread(samples):
    if samples.size < 2 or np.ptp(samples) == 0:
        return 0.0
    return float(samples.std(ddof=1))


def read_decision_failure(tr, mtj_nominal, v_read, mc, grid_points=101):
    """
    Minimum read-decision failure probability over the reference current.

    Sampled P and AP cell currents are fitted with normals; the failure
    probability 0.5 P(I_P < I_ref) + 0.5 P(I_AP > I_ref) is scanned on a
    linear I_ref grid between the nominal currents and refined around the
    grid minimum with a bounded scalar search.

    Raises:
        DegenerateDistributionError: I_P does not exceed I_AP
    """
    i_p_nom = load_line_operating_point(tr, mtj_nominal, MtjState.P, v_read).current
    i_ap_nom = load_line_operating_point(tr, mtj_nominal, MtjState.AP, v_read).current
    if i_p_nom <= i_ap_nom:
        raise DegenerateDistributionError(f"nominal I_P={i_p_nom:g} <= I_AP={i_ap_nom:g}")

    cells = sample_variations(tr, mtj_nominal, mc)
    currents = {}
    for state in MtjState:
        resistance = mtj_nominal.resistance(state, cells.t_mgo, cells.area)
        currents[state] = solve_load_line(tr, resistance, v_read, cells.width, cells.vth).current
    mu_p, mu_ap = float(currents[MtjState.P].mean()), float(currents[MtjState.AP].mean())
    if mu_p <= mu_ap:
        raise DegenerateDistributionError("sampled mean I_P does not exceed sampled mean I_AP")
    sd_p, sd_ap = _spread(currents[MtjState.P]), _spread(currents[MtjState.AP])

    def failure(i_ref, mu_p=mu_p, mu_ap=mu_ap):
        return 0.5 * _below(i_ref, mu_p, sd_p) + 0.5 * _above(i_ref, mu_ap, sd_ap)

    grid = np.linspace(i_ap_nom, i_p_nom, grid_points)
    values = np.array([failure(i) for i in grid])
    # Ties (e.g. zero spread) resolve to the middle of the flat minimum.
    ties = np.flatnonzero(values == values.min())
    best = int(ties[len(ties) // 2])
    spacing = float(grid[1] - grid[0])
    lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, grid_points - 1)]
    refined = optimize.minimize_scalar(failure, bounds=(lo, hi), method='bounded',
                                       options={'xatol': spacing * 1e-3})
    i_ref, probability = float(grid[best]), float(values[best])
    if refined.success and refined.fun < probability:
        i_ref, probability = float(refined.x), float(refined.fun)

    shift_p = Z95 * sd_p / math.sqrt(mc.trials)
    shift_ap = Z95 * sd_ap / math.sqrt(mc.trials)
    low = failure(i_ref, mu_p + shift_p, mu_ap - shift_ap)
    high = failure(i_ref, mu_p - shift_p, mu_ap + shift_ap)
    logger.info("Read decision V=%.3g V, W=%.0f nm: %.4g at I_ref=%.4g A",
                v_read, tr.width * 1e9, probability, i_ref)
    return ReadDecision(probability, i_ref, float(values[best]), float(grid[best]), spacing, low, high)


def disturb_failure_probability(tr, mtj_nominal, p, v_read, read_pulse, mc, dt=DEFAULT_DT):
    """
    Probability that the read current switches a P-state cell within
    read_pulse, from a normal fitted to the log margin ln(J_c / J_read).
    """
    if v_read <= 0:
        return Estimate(0.0, 0.0, 0.0, mc.trials)
    j_c = critical_current_density(p, read_pulse, dt)
    cells = sample_variations(tr, mtj_nominal, mc, p.t_fl)
    resistance = mtj_nominal.resistance(MtjState.P, cells.t_mgo, cells.area)
    j_read = solve_load_line(tr, resistance, v_read, cells.width, cells.vth).current / cells.area
    margins = np.log(j_c * cells.t_fl / p.t_fl) - np.log(j_read)
    return _tail_estimate(margins, 'gaussian')


def bitcell_failure_probability(p_write, p_read, p_disturb):
    """A bit-cell fails if any of its independent mechanisms fails."""
    for value in (p_write, p_read, p_disturb):
        if not 0.0 <= value <= 1.0:
            raise SttLabError(f"probability outside [0, 1]: {value}")
    return 1.0 - (1.0 - p_write) * (1.0 - p_read) * (1.0 - p_disturb)
