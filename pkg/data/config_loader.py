"""
Experiment Configuration Loader

Reads an INI-style experiment file with sections [device], [array], [mc],
[sweep] and [simulate], validates every section with pydantic and turns the
result into the parameter objects the engines consume. A missing file means
"all defaults"; unknown sections or keys are rejected.
"""

import configparser
import logging
import math
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError, field_validator

from models.device_model import LlgsParams, MtjElectrical, TransistorModel
from models.ecc_codec import CodeMode
from models.exceptions import ConfigError
from models.monte_carlo import McConfig
from models.reliability_math import ArraySpec

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    @field_validator('*', mode='before')
    @classmethod
    def _split_lists(cls, value, info):
        annotation = cls.model_fields[info.field_name].annotation
        if isinstance(value, str) and getattr(annotation, '__origin__', None) is list:
            return [item.strip() for item in value.split(',') if item.strip()]
        return value


class DeviceSection(_Section):
    ebn: List[PositiveFloat] = Field([60.0], min_length=1)
    ms: float = Field(850.0, gt=0)
    alpha: float = Field(0.028, ge=0)
    gamma: float = Field(1.76e7, gt=0)
    polarization: float = Field(0.3, gt=0, lt=1)
    t_fl_nm: float = Field(1.0, gt=0)
    diameter_nm: float = Field(64.0, gt=0)
    temperature: float = Field(300.0, gt=0)
    torque_form: Literal['printed', 'cubic'] = 'printed'
    ra_p: float = Field(5.0, gt=0)
    kappa: float = Field(4.5, gt=0)
    tmr: float = Field(1.5, gt=0)
    t_mgo_nm: float = Field(1.0, gt=0)
    vth: float = Field(0.35, gt=0)
    k_gain: float = Field(1800.0, gt=0)
    alpha_sat: float = Field(1.3, gt=0)
    lam: float = Field(0.05, ge=0)
    k_vdsat: float = Field(0.7, gt=0)
    vdd: float = Field(1.0, gt=0)
    v_read_mv: List[float] = [100.0, 200.0]
    pulse_widths_ns: List[float] = [6.0, 8.0]
    read_pulse_ns: float = Field(2.0, gt=0)
    dt_ps: float = Field(1.0, gt=0)


class ArraySection(_Section):
    k: int = Field(128, ge=1)
    deg: int = Field(8, ge=2, le=16)
    scheme: Literal['none', 'secded', 'dected', 'faecc'] = 'faecc'
    size_bytes: int = Field(4 * 2 ** 20, ge=1)
    fit_target: float = Field(1.0, gt=0)
    p_defect: float = Field(1e-5, ge=0, le=1)
    m_values: List[int] = [0, 1, 2, 3, 4]
    penalty_m_values: List[int] = [1, 2, 3, 4]


class McSection(_Section):
    seed: int = Field(1, ge=0, lt=2 ** 64)
    trials: int = Field(10_000, ge=1)
    sigma: float = Field(0.02, ge=0)
    workers: int = Field(1, ge=1)
    tail_model: Literal['empirical', 'gaussian'] = 'empirical'


class SweepSection(_Section):
    bits_start: int = Field(1, ge=1)
    bits_stop: int = Field(2 ** 29, ge=1)
    bits_points: int = Field(30, ge=1)
    width_start_nm: float = Field(150.0, gt=0)
    width_stop_nm: float = Field(600.0, gt=0)
    width_points: int = Field(10, ge=1)


class SimulateSection(_Section):
    words: int = Field(1024, ge=1)
    ebn: float = Field(40.0, gt=0)
    age_hours: float = Field(1.0, ge=0)
    p_write_fail: float = Field(0.0, ge=0, le=1)
    p_read_flip: float = Field(0.0, ge=0, le=1)
    fault_map: Optional[str] = None
    fit_trials: int = Field(200, ge=1)
    horizon_hours: Optional[float] = Field(None, gt=0)


class ExperimentConfig(BaseModel):
    """Validated experiment file plus helpers that build engine objects."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    device: DeviceSection = DeviceSection()
    array: ArraySection = ArraySection()
    mc: McSection = McSection()
    sweep: SweepSection = SweepSection()
    simulate: SimulateSection = SimulateSection()

    @property
    def mode(self):
        return CodeMode(self.array.scheme)

    @property
    def size_bits(self):
        return self.array.size_bytes * 8

    def mc_config(self):
        """
        Monte Carlo settings from the [mc] section.

        Returns:
            McConfig: seed, trial count, process sigma, worker count and tail model
        """
        return McConfig(seed=self.mc.seed, trials=self.mc.trials, sigma_fraction=self.mc.sigma,
                        workers=self.mc.workers, tail_model=self.mc.tail_model)

    def array_spec(self, m):
        """
        Geometry of the configured array protected by a BCH code.

        Args:
            m: Number of retention errors the code corrects per word

        Returns:
            ArraySpec: word count, data and codeword bits for size_bytes of data
        """
        return ArraySpec.with_bch(self.size_bits, self.array.k, m, self.array.deg,
                                  self.array.fit_target)

    def llgs_params(self, ebn=None):
        """
        Macrospin parameters of the free layer.

        Args:
            ebn: Thermal stability factor; defaults to the first [device] ebn value

        Returns:
            LlgsParams: anisotropy field chosen so the barrier equals ebn
        """
        d = self.device
        return LlgsParams.for_ebn(d.ebn[0] if ebn is None else ebn, ms=d.ms, alpha=d.alpha,
                                  gamma=d.gamma, polarization=d.polarization, t_fl=d.t_fl_nm * 1e-9,
                                  temperature=d.temperature, diameter=d.diameter_nm * 1e-9,
                                  torque_form=d.torque_form)

    def mtj(self):
        """Electrical MTJ model with the reference barrier at the nominal MgO thickness."""
        d = self.device
        return MtjElectrical(ra_p=d.ra_p, kappa=d.kappa, tmr0=d.tmr,
                             area=math.pi / 4.0 * (d.diameter_nm * 1e-9) ** 2,
                             t_mgo=d.t_mgo_nm * 1e-9, t_ref=d.t_mgo_nm * 1e-9)

    def transistor(self, width_nm):
        """
        Access transistor of the given width.

        Args:
            width_nm: Channel width in nanometers

        Returns:
            TransistorModel: alpha-power model gated at vdd
        """
        d = self.device
        return TransistorModel(vth=d.vth, k_gain=d.k_gain, alpha_sat=d.alpha_sat,
                               width=width_nm * 1e-9, lam=d.lam, k_vdsat=d.k_vdsat, v_gate=d.vdd)


SECTIONS = tuple(ExperimentConfig.model_fields)


def load_config(path=None):
    """
    Load and validate an experiment file.

    Args:
        path: INI file path, or None for the all-defaults configuration

    Raises:
        ConfigError: unreadable file, unknown section or key, invalid value
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")

    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path, encoding='utf-8')
    except configparser.Error as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e

    unknown = [name for name in parser.sections() if name not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown section(s) {unknown} in {path}; expected {list(SECTIONS)}")
    try:
        config = ExperimentConfig(**{name: dict(parser[name]) for name in parser.sections()})
    except ValidationError as e:
        raise ConfigError(f"invalid configuration in {path}:\n{e}") from e
    logger.info("Loaded configuration from %s", path)
    return config


def apply_overrides(config, seed=None, trials=None, deg=None, k=None, mode=None):
    """Command-line flags take precedence over file values; None leaves a key alone."""
    mc_changes = {key: value for key, value in (('seed', seed), ('trials', trials)) if value is not None}
    array_changes = {key: value for key, value in (('deg', deg), ('k', k), ('scheme', mode))
                     if value is not None}
    try:
        mc = McSection(**{**config.mc.model_dump(), **mc_changes})
        array = ArraySection(**{**config.array.model_dump(), **array_changes})
    except ValidationError as e:
        raise ConfigError(f"invalid command-line override:\n{e}") from e
    return config.model_copy(update={'mc': mc, 'array': array})
