from __future__ import annotations

import numpy as np

from .data import SplitPlan


def split_leave_subject_out(trials, held_out: int, seed: int) -> SplitPlan:
    """Test = every trial of ``held_out``; validation = an equally sized
    uniform draw (no stratification) from the remaining trials."""
    subjects = np.asarray(getattr(trials, "subjects", trials))
    test = np.flatnonzero(subjects == held_out)
    if test.size == 0:
        raise ValueError(f"subject {held_out} not present")
    pool = np.flatnonzero(subjects != held_out)
    if pool.size < test.size:
        raise ValueError(f"non-test pool ({pool.size}) smaller than test set ({test.size})")
    rng = np.random.default_rng(seed)
    pick = np.zeros(pool.size, dtype=bool)
    pick[rng.choice(pool.size, size=test.size, replace=False)] = True
    return SplitPlan(train=pool[~pick], validation=pool[pick], test=test, held_out_subject=int(held_out), seed=int(seed))


def leave_subject_out_plans(trials, seed: int) -> list[SplitPlan]:
    subjects = np.asarray(getattr(trials, "subjects", trials))
    return [split_leave_subject_out(trials, int(s), seed) for s in np.unique(subjects)]
