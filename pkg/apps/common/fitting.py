"""
Small regression helpers used for fitted exponents in reports.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    rvalue: float
    stderr: float
    points: int

    def to_dict(self) -> dict:
        return {
            'slope': self.slope,
            'intercept': self.intercept,
            'rvalue': self.rvalue,
            'stderr': self.stderr,
            'points': self.points,
        }


def line_fit(x, y) -> LineFit:
    """Least-squares line through the finite (x, y) pairs; NaN slope when fewer than two."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size < 2 or np.ptp(x) == 0:
        return LineFit(float('nan'), float('nan'), float('nan'), float('nan'), int(x.size))
    if np.ptp(y) == 0:
        return LineFit(0.0, float(y[0]), 0.0, 0.0, int(x.size))
    res = stats.linregress(x, y)
    return LineFit(float(res.slope), float(res.intercept), float(res.rvalue), float(res.stderr), int(x.size))


def loglog_fit(x, y) -> LineFit:
    """Fit log y against log x, dropping nonpositive entries."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    return line_fit(np.log(x[keep]), np.log(y[keep]))
