"""
Report Formatting

Turns engine results into the text artifacts the explorer emits: CSV curves
with a fixed numeric format, the correction-capability matrix and the
simulation summary.
"""

import io
import logging
import sys

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.8e'


class ReportWriter:
    """
    Writes explorer results to a stream or file.

    CSV output always uses '.' decimals, scientific notation with nine
    significant digits and '\\n' line endings so re-runs are byte-identical.
    """

    def __init__(self, out=None):
        self.out = out

    def _emit(self, text):
        if self.out is None:
            sys.stdout.write(text)
        elif isinstance(self.out, io.TextIOBase):
            self.out.write(text)
        else:
            with open(self.out, 'w', encoding='utf-8', newline='') as fh:
                fh.write(text)
            logger.info("Wrote %s", self.out)

    def write_curve(self, frame):
        self._emit(frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n'))

    def write_capability_table(self, scheme, cells):
        """
        Realized capability matrix: one line per error pattern with the
        expected and realized answers and the PASS/FAIL verdict.
        """
        width = max(len(cell.pattern.value) for cell in cells)
        lines = [f"code: {scheme.mode.value} (k={scheme.k}, n={scheme.n}, deg={scheme.deg})",
                 f"{'error pattern':<{width}}  expected  realized  cases  verdict"]
        for cell in cells:
            expected = 'yes' if cell.expected else 'no'
            verdict = 'PASS' if cell.passed else 'FAIL'
            if cell.silent:
                verdict += f" ({cell.silent} silent)"
            lines.append(f"{cell.pattern.value:<{width}}  {expected:<8}  {cell.realized:<8}  "
                         f"{cell.cases:>5}  {verdict}")
        self._emit("\n".join(lines) + "\n")

    def write_simulation_summary(self, result):
        stats = result.workload.stats
        fractions = stats.scenario_fractions()
        lines = [
            f"words,{result.workload.words}",
            f"age_hours,{result.workload.age_seconds / 3600.0:{FLOAT_FORMAT[1:]}}",
            f"clean,{stats.clean}",
            f"corrected_single,{stats.corrected_single}",
            f"corrected_double,{stats.corrected_double}",
            f"data_loss,{stats.data_loss}",
            f"silent_corruptions,{result.workload.silent_corruptions}",
            f"probe_reads,{stats.probe_reads}",
        ]
        lines += [f"fraction_{name},{value:{FLOAT_FORMAT[1:]}}" for name, value in fractions.items()]
        for name, estimate in (('fit', result.fit), ('yield', result.yield_estimate)):
            lines.append(f"{name},{estimate.value:{FLOAT_FORMAT[1:]}}")
            lines.append(f"{name}_ci_low,{estimate.low:{FLOAT_FORMAT[1:]}}")
            lines.append(f"{name}_ci_high,{estimate.high:{FLOAT_FORMAT[1:]}}")
        lines.append(f"fit_analytic,{result.fit_analytic:{FLOAT_FORMAT[1:]}}")
        lines.append(f"yield_analytic,{result.yield_analytic:{FLOAT_FORMAT[1:]}}")
        self._emit("quantity,value\n" + "\n".join(lines) + "\n")
