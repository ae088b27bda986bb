"""Central finite-difference gradient checker."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

STEP = 1e-3
TOLERANCE = 1e-4
# denominator floor so entries where both gradients vanish compare absolutely
FLOOR = 1e-7


@dataclass
class GradReport:
    max_rel_error: float
    per_input: dict[str, float] = field(default_factory=dict)
    n_compared: int = 0
    n_excluded: int = 0
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_rel_error)) and self.max_rel_error < self.tolerance


def relative_error(analytic, numeric) -> np.ndarray:
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), FLOOR)


def numeric_gradient(f: Callable[[], float], x: np.ndarray, step: float = STEP) -> np.ndarray:
    """d f / d x by central differences; ``x`` is perturbed in place and restored."""
    g = np.zeros(x.shape, dtype=np.float64)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        h = step * max(1.0, abs(float(orig)))
        flat[k] = orig + h
        fp = f()
        flat[k] = orig - h
        fm = f()
        flat[k] = orig
        gf[k] = (fp - fm) / (2 * h)
    return g


def grad_check(op: Callable[[], float], point: dict[str, np.ndarray], analytic: dict[str, np.ndarray],
               tolerance: float = TOLERANCE, step: float = STEP,
               exclude: dict[str, np.ndarray] | None = None) -> GradReport:
    """Compare analytic gradients against central differences of scalar ``op``.

    ``op`` closes over the float64 arrays in ``point`` (perturbed in place).
    ``exclude`` maps names to boolean masks of entries left out of the
    comparison, e.g. ReLU inputs at the kink.
    """
    report = GradReport(0.0, tolerance=tolerance)
    for name, x in point.items():
        num = numeric_gradient(op, x, step)
        err = relative_error(analytic[name], num)
        if exclude and name in exclude:
            mask = ~np.asarray(exclude[name], dtype=bool)
            report.n_excluded += int((~mask).sum())
            err = err[mask]
        worst = float(err.max()) if err.size else 0.0
        report.n_compared += int(err.size)
        report.per_input[name] = worst
        report.max_rel_error = max(report.max_rel_error, worst)
    return report
