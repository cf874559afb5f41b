"""
Artifact Readers and Writers

File formats exchanged with other tools:
- fault maps: whitespace-separated `word bit {0|1}` lines, '#' comments
- read/write traces: CSV `t,addr,op,outcome,probe_used`
- code matrices: one row of 0/1 characters per line
- LLGS trajectories: CSV `t_ns,mx,my,mz`
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from models.array_sim import FaultMap
from models.exceptions import ConfigError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.8e'
TRACE_COLUMNS = ['t', 'addr', 'op', 'outcome', 'probe_used']
TRAJECTORY_COLUMNS = ['t_ns', 'mx', 'my', 'mz']


def read_fault_map(path):
    """
    Parse a fault map file into a FaultMap.

    Raises:
        ConfigError: missing file, malformed line or stuck value other than 0/1
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"fault map not found: {path}")
    if not any(line.split('#', 1)[0].strip() for line in path.read_text(encoding='utf-8').splitlines()):
        return FaultMap()
    try:
        frame = pd.read_csv(path, sep=r'\s+', header=None, names=['word', 'bit', 'value'],
                            comment='#', dtype='Int64')
    except (ValueError, pd.errors.ParserError) as e:
        raise ConfigError(f"malformed fault map {path}: {e}") from e
    if frame.isna().any().any():
        raise ConfigError(f"fault map {path} has incomplete lines")
    if not frame['value'].isin([0, 1]).all():
        raise ConfigError(f"fault map {path} has stuck values other than 0/1")
    if (frame[['word', 'bit']] < 0).any().any():
        raise ConfigError(f"fault map {path} has negative indices")
    logger.debug("Read %d faults from %s", len(frame), path)
    return FaultMap(tuple(frame.itertuples(index=False, name=None)))


def write_fault_map(fault_map, path):
    """Inverse of read_fault_map: one `word bit value` line per fault."""
    lines = [f"{word} {bit} {value}" for word, bit, value in fault_map]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding='utf-8')


def trace_frame(records):
    """Access trace as a DataFrame with TRACE_COLUMNS."""
    return pd.DataFrame([(r.t, r.addr, r.op, r.outcome, int(r.probe_used)) for r in records],
                        columns=TRACE_COLUMNS)


def write_trace(records, path):
    trace_frame(records).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info("Wrote %d trace records to %s", len(records), path)


def format_matrix(matrix):
    return "\n".join("".join(str(int(bit)) for bit in row) for row in np.asarray(matrix)) + "\n"


def parse_matrix(text):
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    return np.array([[int(ch) for ch in row] for row in rows], dtype=np.uint8)


def dump_matrices(scheme, directory):
    """Write G and H of a scheme as generator.txt and parity_check.txt."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, matrix in (('generator', scheme.generator), ('parity_check', scheme.parity_check)):
        path = directory / f"{name}.txt"
        path.write_text(format_matrix(matrix), encoding='utf-8')
        paths[name] = path
    return paths


def write_trajectory(trajectory, path):
    """
    Write an LLGS trajectory as CSV.

    Args:
        trajectory: Trajectory with times in seconds and unit vectors m
        path: Output file; columns t_ns, mx, my, mz
    """
    frame = pd.DataFrame({'t_ns': trajectory.t * 1e9, 'mx': trajectory.m[:, 0],
                          'my': trajectory.m[:, 1], 'mz': trajectory.m[:, 2]})
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
