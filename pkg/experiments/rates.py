"""
Experimental convergence rates.

Pairwise rates follow r_m = log10(E_{m-1}/E_m) / log10(N_m/N_{m-1}); the
least-squares rate is the slope of log E against log(1/h).
"""

import math
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from models import ErrorKind, RateRow

RATE_COLUMNS = ["k", "n_cells", "h", "error", "rate", "kind"]


def pairwise_rates(n_cells: Sequence[int], errors: Sequence[float]) -> list[Optional[float]]:
    """Rate of each row against the previous one; None for the first row or a zero error."""
    rates: list[Optional[float]] = [None]
    for m in range(1, len(errors)):
        prev, cur = errors[m - 1], errors[m]
        if prev > 0.0 and cur > 0.0 and n_cells[m] != n_cells[m - 1]:
            rates.append(math.log10(prev / cur) / math.log10(n_cells[m] / n_cells[m - 1]))
        else:
            rates.append(None)
    return rates


def least_squares_rate(n_cells: Sequence[int], errors: Sequence[float]) -> Optional[float]:
    """Fitted slope of log(error) against log(N), sign flipped; needs two positive errors."""
    pairs = [(n, e) for n, e in zip(n_cells, errors) if e > 0.0]
    if len(pairs) < 2:
        return None
    n, e = np.array(pairs, dtype=float).T
    slope, _ = np.polyfit(np.log(n), np.log(e), 1)
    return float(-slope)


def format_rate(rate: Optional[float]) -> str:
    return "n/a" if rate is None else f"{rate:.3f}"


def rate_rows(
    k: int,
    n_cells: Sequence[int],
    hs: Sequence[float],
    errors: Sequence[float],
    kind: ErrorKind,
) -> list[RateRow]:
    rates = pairwise_rates(n_cells, errors)
    return [
        RateRow(k=k, n_cells=n, h=h, error=e, rate=r, kind=kind)
        for n, h, e, r in zip(n_cells, hs, errors, rates)
    ]


def theory_rate(kind: ErrorKind, k: int) -> int:
    """Expected rate of each error kind for degree k."""
    odd = k % 2 == 1
    if kind is ErrorKind.DICHOTOMY:
        if k == 1:
            return 4
        return k + 1 if odd else k
    if kind is ErrorKind.IMPULSE:
        return 2 * k if odd else 2 * k - 2
    if kind is ErrorKind.UX:
        return k
    # u and w errors of the RLW scheme
    return k + 1 if odd else k


def rows_to_frame(rows: Sequence[RateRow], with_theory: bool = True) -> pd.DataFrame:
    """
    Table of rate rows ordered by (kind, k, N). One theory row per (kind, k)
    follows its sweep, with the expected rate in the rate column.
    """
    ordered = sorted(rows, key=lambda r: (list(ErrorKind).index(r.kind), r.k, r.n_cells))
    records = []
    seen = None
    for row in ordered:
        key = (row.kind, row.k)
        if with_theory and seen is not None and key != seen:
            records.append(_theory_record(*seen))
        seen = key
        records.append({
            "k": row.k, "n_cells": row.n_cells, "h": row.h, "error": row.error,
            "rate": np.nan if row.rate is None else row.rate, "kind": row.kind.value,
        })
    if with_theory and seen is not None:
        records.append(_theory_record(*seen))
    return pd.DataFrame.from_records(records, columns=RATE_COLUMNS)


def _theory_record(kind: ErrorKind, k: int) -> dict:
    return {
        "k": k, "n_cells": np.nan, "h": np.nan, "error": np.nan,
        "rate": float(theory_rate(kind, k)), "kind": f"{kind.value}-theory",
    }
