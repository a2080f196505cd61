"""
Theory Check Pipeline

Evaluates the closed-form identities of the polynomial psi that the
node-value/bubble splitting rests on, for odd and even degrees, and compares
the eigenvalues of the node-value Gram matrix with their closed form. Every
value is written next to the expected one; nothing here is a timing run.

Usage:
    python experiments/theory_check.py                 # k = 1..7, eigenvalues on N = 8
    python experiments/theory_check.py --k 3,5 --N 8,16
"""

import datetime
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from numpy.polynomial import Polynomial

sys.path.append(str(Path(__file__).parent.parent))

from utils import log
from experiments.output import CsvReport
from fem.basis import FeSpace, PeriodicMesh, psi_polynomial
from fem.projection import build_split_basis, gram_eigenvalues_s1
from models import RunConfig

logger = log.setup_verbose_logging("theory_check")

CHECK_COLUMNS = ["check", "k", "n_cells", "computed", "expected", "abs_error"]
TOLERANCE = 1e-10
DEFAULT_EIGEN_CELLS = [8]

# x -> 1 - x
_REFLECT = Polynomial([1.0, -1.0])
_X = Polynomial([0.0, 1.0])


def _integral(p: Polynomial) -> float:
    antiderivative = p.integ()
    return float(antiderivative(1.0) - antiderivative(0.0))


def psi_identities(k: int) -> list[tuple[str, float, float]]:
    """(name, computed, expected) for every identity psi of degree k satisfies."""
    p = psi_polynomial(k)
    dp = p.deriv()
    reflected = p(_REFLECT)
    rows = [
        ("psi(0)", float(p(0.0)), 0.0),
        ("psi(1)", float(p(1.0)), 1.0),
    ]
    if k % 2 == 0:
        rows += [
            ("int psi(x)psi(1-x)", _integral(p * reflected), -1.0 / (k * (k + 1) * (k + 2))),
            ("int psi", _integral(p), 1.0 / ((k + 1) * (k + 2))),
            ("psi'(0)", float(dp(0.0)), -(k + 1) / 2.0),
        ]
        return rows

    rows += [
        ("int psi^2", _integral(p * p), 1.0 / (k * (k + 2))),
        ("int psi(x)psi(1-x)", _integral(p * reflected), 1.0 / (k * (k + 1) * (k + 2))),
        ("int psi", _integral(p), 1.0 / (k * (k + 1))),
        ("int psi'(x)psi(1-x)", _integral(dp * reflected), 1.0 / (k + 1)),
        ("psi'(0)", float(dp(0.0)), (k + 1) / 2.0),
        ("psi'(1)", float(dp(1.0)), (k * k + 2 * k - 1) / 2.0),
    ]
    kernel_a = (k + 1) * reflected - p
    kernel_b = float(dp(1.0)) * reflected + float(dp(0.0)) * p
    for j in range(1, k + 1):
        xj = _X ** j
        rows += [
            (f"int x^{j} psi", _integral(xj * p), 1.0 / (k * (k + 2))),
            (f"int (1-x)^{j} psi", _integral(_REFLECT ** j * p), 1.0 / (k * (k + 1) * (k + 2))),
            (f"int x^{j} [(k+1)psi(1-x) - psi]", _integral(xj * kernel_a), 0.0),
            (f"int x^{j} [psi'(1)psi(1-x) + psi'(0)psi]", _integral(xj * kernel_b), 1.0 / (k + 1)),
        ]
    return rows


def gram_eigenvalue_check(k: int, n_cells: int) -> tuple[float, float]:
    """
    Largest eigenvalue mismatch between the node-value Gram matrix on [0, 1]
    and its closed form, and the largest closed-form eigenvalue for scale.
    """
    space = FeSpace(PeriodicMesh(0.0, 1.0, n_cells), k)
    computed = np.sort(np.linalg.eigvalsh(build_split_basis(space).ell_gram))
    expected = np.sort(gram_eigenvalues_s1(k, space.mesh))
    return float(np.max(np.abs(computed - expected))), float(expected[-1])


class TheoryCheckPipeline:
    """Identity and eigenvalue table for a set of degrees."""

    def __init__(self, config: RunConfig, presets: dict = None, save: bool = True):
        self.start = datetime.datetime.now()
        self.config = config

        log.header("THEORY CHECK: psi identities and Gram eigenvalues")

        records = []
        for k in config.degrees:
            for name, computed, expected in psi_identities(k):
                records.append({
                    "check": name, "k": k, "n_cells": np.nan,
                    "computed": computed, "expected": expected, "abs_error": abs(computed - expected),
                })

        eigen_cells = [
            (k, n) for k in config.degrees if k % 2 == 1
            for n in (config.n_cells or DEFAULT_EIGEN_CELLS)
        ]
        for i, (k, n) in enumerate(eigen_cells, 1):
            if n < 2:
                log.warn(f"Skipping eigenvalue check for N={n}; the splitting needs two cells")
                continue
            mismatch, largest = gram_eigenvalue_check(k, n)
            # stored relative to the largest eigenvalue
            records.append({
                "check": "gram eigenvalues", "k": k, "n_cells": n,
                "computed": mismatch, "expected": 0.0, "abs_error": mismatch / largest,
            })
            log.progress(i, len(eigen_cells), log.cell_label(k, n), f"relative mismatch {mismatch / largest:.2e}")

        self.frame = pd.DataFrame.from_records(records, columns=CHECK_COLUMNS)
        self.failures = self.frame[self.frame["abs_error"] > TOLERANCE]
        for _, row in self.failures.iterrows():
            log.err(f"k={row['k']}: {row['check']} off by {row['abs_error']:.3e}")

        self.output_path: Optional[Path] = None
        if save:
            log.step("Writing report...")
            report = CsvReport(config)
            report.add_header("tolerance", TOLERANCE)
            report.set_frame(self.frame)
            self.output_path = report.save(config.output or "theory_check.csv")
            log.info(f"Saved {self.output_path}")

        elapsed = datetime.datetime.now() - self.start
        log.summary_table("Theory Check Summary", [
            ("Checks", str(len(self.frame))),
            ("Above tolerance", str(len(self.failures))),
            ("Worst error", f"{self.frame['abs_error'].max():.3e}"),
            ("Elapsed", str(elapsed)),
        ])
        if self.failures.empty:
            log.ok("Theory check complete")
        else:
            log.warn(f"{len(self.failures)} checks exceed {TOLERANCE:g}")


def main():
    from experiments.cli import main as cli_main
    sys.exit(cli_main(["theory-check"] + sys.argv[1:]))


if __name__ == "__main__":
    main()
