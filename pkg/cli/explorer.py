"""
STT-MRAM Reliability Explorer

Command-line front end that wires the reliability analytics, the ECC codec,
the array simulator and the device model into reproducible experiments.
Every command is a pure function of (config file, flags) and emits CSV or a
plain-text report.

Exit codes: 0 success, 1 validation or file error, 2 verification failure.
"""

import argparse
import logging
import math
import sys
from dataclasses import dataclass

import numpy as np
import pandas as pd

from cli.reports import ReportWriter
from data.artifacts import read_fault_map, write_trace, write_trajectory
from data.config_loader import apply_overrides, load_config
from models.array_sim import (ArrayTemplate, ErrorModel, build_array, measure_fit, measure_yield,
                              run_workload)
from models.capability_table import verify_capability
from models.device_model import (tilted_state, bitcell_failure_probability, critical_current_density,
                                 disturb_failure_probability, llgs_simulate, read_decision_failure,
                                 thermal_angle_distribution, write_failure_probability)
from models.ecc_codec import CodeMode, build_scheme, correction_capacity
from models.exceptions import ConfigError, SttLabError, UnattainableTargetError, VerificationFailure
from models.reliability_math import (SECONDS_PER_HOUR, ArrayReliabilityModel, ArraySpec,
                                     analytic_yield, lifetime_seconds, mttf_numeric, mttf_to_fit,
                                     percent_ebn_increase, required_ebn, survival_function)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_VERIFICATION = 2

# Drive used for the exported switching trajectory, relative to J_c.
TRAJECTORY_OVERDRIVE = 1.2


def cmd_ebn_curve(config):
    """Required ebn of an unprotected array versus its size in bits."""
    sweep = config.sweep
    bits = np.unique(np.rint(np.logspace(math.log10(sweep.bits_start), math.log10(sweep.bits_stop),
                                         sweep.bits_points)).astype(np.int64))
    rows = []
    for size in bits:
        try:
            ebn = required_ebn(ArraySpec.raw(int(size), config.array.fit_target)).ebn
        except UnattainableTargetError as e:
            logger.warning("bits=%d: %s", size, e)
            ebn = float('nan')
        rows.append({'bits': int(size), 'required_ebn': ebn})
    return pd.DataFrame(rows, columns=['bits', 'required_ebn'])


def cmd_ebn_ecc(config):
    """Required ebn of the configured array versus the correction capability m."""
    model = ArrayReliabilityModel(config.array_spec(0))
    rows = model.correction_sweep(sorted(config.array.m_values), config.array.deg, config.size_bits)
    for row in rows:
        if 'error' in row:
            logger.warning("m=%d: %s", row['m'], row['error'])
    return pd.DataFrame(rows, columns=['m', 'required_ebn'])


def cmd_ebn_penalty(config):
    """Percentage ebn increase caused by the expected hard-fault histogram."""
    rows = [{'m': m, 'percent_increase': percent_ebn_increase(config.array_spec(m), config.array.p_defect)}
            for m in sorted(config.array.penalty_m_values)]
    return pd.DataFrame(rows, columns=['m', 'percent_increase'])


def cmd_codec_verify(config):
    """Build the configured code and replay every capability pattern on it."""
    scheme = build_scheme(config.array.deg, config.array.k, config.mode)
    return scheme, verify_capability(scheme, config.mc_config())


def cmd_device_sweep(config):
    """
    Bit-cell failure probabilities across the access-transistor width sweep,
    for every configured barrier, write pulse width and read voltage, with
    the array yields they imply under SECDED and failure-aware SECDED.
    """
    d, sweep = config.device, config.sweep
    mtj, mc = config.mtj(), config.mc_config()
    dt = d.dt_ps * 1e-12
    widths = np.linspace(sweep.width_start_nm, sweep.width_stop_nm, sweep.width_points)
    spec = ArraySpec.with_bch(config.size_bits, config.array.k, 1, config.array.deg)
    caps = {mode: correction_capacity(mode).max_hard for mode in (CodeMode.SECDED, CodeMode.FAECC)}

    write_cache, read_cache, disturb_cache = {}, {}, {}
    rows = []
    for ebn in sorted(d.ebn):
        p = config.llgs_params(ebn)
        for pulse_ns in sorted(d.pulse_widths_ns):
            for v_mv in sorted(d.v_read_mv):
                for width in widths:
                    tr = config.transistor(width)
                    if (ebn, pulse_ns, width) not in write_cache:
                        write_cache[ebn, pulse_ns, width] = write_failure_probability(
                            tr, mtj, p, d.vdd, pulse_ns * 1e-9, mc, dt).value
                    if (v_mv, width) not in read_cache:
                        read_cache[v_mv, width] = read_decision_failure(
                            tr, mtj, v_mv * 1e-3, mc).probability
                    if (ebn, v_mv, width) not in disturb_cache:
                        disturb_cache[ebn, v_mv, width] = disturb_failure_probability(
                            tr, mtj, p, v_mv * 1e-3, d.read_pulse_ns * 1e-9, mc, dt).value
                    p_write = write_cache[ebn, pulse_ns, width]
                    p_read = read_cache[v_mv, width]
                    p_disturb = disturb_cache[ebn, v_mv, width]
                    p_cell = bitcell_failure_probability(p_write, p_read, p_disturb)
                    rows.append({
                        'ebn': ebn, 'W_nm': width, 'pulse_ns': pulse_ns, 'v_read_mv': v_mv,
                        'p_write_fail': p_write, 'p_read_decision': p_read, 'p_disturb': p_disturb,
                        'p_bitcell': p_cell,
                        'yield_secded': analytic_yield(spec, caps[CodeMode.SECDED], p_cell),
                        'yield_faecc': analytic_yield(spec, caps[CodeMode.FAECC], p_cell),
                    })
    return pd.DataFrame(rows)


def switching_trajectory(config):
    """Nominal write trajectory at the shortest pulse, driven above J_c."""
    d = config.device
    p = config.llgs_params()
    pulse = min(d.pulse_widths_ns) * 1e-9
    j_c = critical_current_density(p, pulse, d.dt_ps * 1e-12)
    m0 = tilted_state(p.easy_axis, thermal_angle_distribution(p.ebn).median)
    return llgs_simulate(p, m0, TRAJECTORY_OVERDRIVE * j_c, pulse, d.dt_ps * 1e-12)


@dataclass
class SimulationResult:
    workload: object
    fit: object
    fit_analytic: float
    yield_estimate: object
    yield_analytic: float


def cmd_simulate(config, record_trace=False):
    """
    Write-all / age / read-all workload on a simulated array, plus measured
    FIT (defect-free design) and yield (configured defect rate) next to their
    analytic values.
    """
    sim = config.simulate
    mc = config.mc_config()
    scheme = build_scheme(config.array.deg, config.array.k, config.mode)
    cap = scheme.capacity
    spec = ArraySpec(k=scheme.k, n=scheme.n, s=sim.words, m=cap.max_soft,
                     fit_target=config.array.fit_target)

    fault_map = read_fault_map(sim.fault_map) if sim.fault_map else None
    arr = build_array(spec, scheme, sim.ebn, mc,
                      ErrorModel(p_write_fail=sim.p_write_fail, p_read_flip=sim.p_read_flip),
                      p_defect=config.array.p_defect, fault_map=fault_map, record_trace=record_trace)
    workload = run_workload(arr, sim.age_hours * SECONDS_PER_HOUR, mc)

    horizon = sim.horizon_hours * SECONDS_PER_HOUR if sim.horizon_hours else None
    # The closed-form FIT assumes identical cells, so the measurement does too.
    fit = measure_fit(ArrayTemplate(spec, scheme, sim.ebn),
                      mc.with_overrides(trials=sim.fit_trials, sigma_fraction=0.0), horizon)
    mttf_hours = lifetime_seconds(sim.ebn) * mttf_numeric(survival_function(spec)) / SECONDS_PER_HOUR
    yield_estimate = measure_yield(spec, scheme, config.array.p_defect, mc)
    return SimulationResult(workload, fit, mttf_to_fit(mttf_hours), yield_estimate,
                            analytic_yield(spec, cap.max_hard, config.array.p_defect))


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


class ExplorerApp:
    """
    Argument parsing and dispatch for the explorer subcommands.

    Flags override config-file keys, which override built-in defaults.
    """

    def __init__(self):
        self.parser = self._create_parser()

    def _create_parser(self):
        common = _ArgumentParser(add_help=False)
        common.add_argument('--config', metavar='PATH', help='experiment file (INI)')
        common.add_argument('--seed', type=int, metavar='U64', help='Monte Carlo master seed')
        common.add_argument('--trials', type=int, metavar='N', help='Monte Carlo trial count')
        common.add_argument('--out', metavar='PATH', help='output file (default: stdout)')

        parser = _ArgumentParser(prog='sttlab', description='STT-MRAM reliability explorer')
        sub = parser.add_subparsers(dest='command', required=True)
        sub.add_parser('ebn-curve', parents=[common], help='required ebn vs raw array size')
        sub.add_parser('ebn-ecc', parents=[common], help='required ebn vs correction capability')
        sub.add_parser('ebn-penalty', parents=[common], help='ebn increase caused by hard faults')
        verify = sub.add_parser('codec-verify', parents=[common], help='correction capability matrix')
        verify.add_argument('--deg', type=int, help='Galois-field degree')
        verify.add_argument('--k', type=int, help='data bits per word')
        verify.add_argument('--mode', choices=[m.value for m in CodeMode], help='code mode')
        sweep = sub.add_parser('device-sweep', parents=[common], help='bit-cell failure vs width')
        sweep.add_argument('--trajectory', metavar='PATH', help='also export a switching trajectory CSV')
        simulate = sub.add_parser('simulate', parents=[common], help='array workload simulation')
        simulate.add_argument('--trace', metavar='PATH', help='write the access trace CSV')
        return parser

    def run(self, argv=None):
        """
        Parse argv, run one subcommand and map failures to exit codes.

        Args:
            argv: Argument list without the program name; sys.argv when None

        Returns:
            int: EXIT_OK, EXIT_VALIDATION or EXIT_VERIFICATION
        """
        try:
            args = self.parser.parse_args(argv)
            config = apply_overrides(load_config(args.config), seed=args.seed, trials=args.trials,
                                     deg=getattr(args, 'deg', None), k=getattr(args, 'k', None),
                                     mode=getattr(args, 'mode', None))
            writer = ReportWriter(args.out)
            getattr(self, '_run_' + args.command.replace('-', '_'))(config, args, writer)
            return EXIT_OK
        except VerificationFailure as e:
            print(f"Verification Failure: {e}", file=sys.stderr)
            return EXIT_VERIFICATION
        except SttLabError as e:
            print(f"Validation Error: {e}", file=sys.stderr)
            return EXIT_VALIDATION
        except OSError as e:
            print(f"File Error: {e}", file=sys.stderr)
            return EXIT_VALIDATION

    def _run_ebn_curve(self, config, args, writer):
        writer.write_curve(cmd_ebn_curve(config))

    def _run_ebn_ecc(self, config, args, writer):
        writer.write_curve(cmd_ebn_ecc(config))

    def _run_ebn_penalty(self, config, args, writer):
        writer.write_curve(cmd_ebn_penalty(config))

    def _run_codec_verify(self, config, args, writer):
        scheme, cells = cmd_codec_verify(config)
        writer.write_capability_table(scheme, cells)
        failed = [cell.pattern.value for cell in cells if not cell.passed]
        if failed:
            raise VerificationFailure(f"{scheme.mode.value}: {', '.join(failed)}")

    def _run_device_sweep(self, config, args, writer):
        writer.write_curve(cmd_device_sweep(config))
        if args.trajectory:
            write_trajectory(switching_trajectory(config), args.trajectory)

    def _run_simulate(self, config, args, writer):
        result = cmd_simulate(config, record_trace=bool(args.trace))
        writer.write_simulation_summary(result)
        if args.trace:
            write_trace(result.workload.trace, args.trace)


def main(argv=None):
    return ExplorerApp().run(argv)
