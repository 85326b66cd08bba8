"""Deterministic parallel Monte Carlo orchestration.

Trial i always consumes the stream (seed, i), and reductions run in a
fixed pairwise order over the trial-indexed results, so aggregates are
bit-identical for any worker count.  Failed trials are recorded as
sentinel entries and skipped by the reduction.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from ..errors import GlbmError
from ..sampling import RngStream

__all__ = ["TrialFailure", "McResult", "parallel_mc", "pairwise_sum", "mean_and_se"]


@dataclass(frozen=True)
class TrialFailure:
    """Sentinel record for a trial that raised a numerical error."""

    trial: int
    error: str


@dataclass(frozen=True)
class McResult:
    results: list
    failures: list[TrialFailure]
    aggregate: Any = None

    @property
    def n_ok(self) -> int:
        return len(self.results)


def _run_one(task: Callable, seed: int, trial: int):
    try:
        return trial, task(trial, RngStream(seed, trial))
    except (GlbmError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return trial, TrialFailure(trial=trial, error=f"{type(exc).__name__}: {exc}")


def pairwise_sum(items: Sequence):
    """Fixed-topology pairwise reduction (numerically reproducible sums)."""
    if len(items) == 0:
        raise ValueError("nothing to reduce")
    level = list(items)
    while len(level) > 1:
        nxt = []
        for k in range(0, len(level) - 1, 2):
            nxt.append(level[k] + level[k + 1])
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def mean_and_se(values: Sequence[float]) -> tuple[float, float]:
    """Mean and standard error via pairwise-deterministic sums."""
    n = len(values)
    vals = [float(v) for v in values]
    mean = pairwise_sum(vals) / n
    if n < 2:
        return mean, float("nan")
    var = pairwise_sum([(v - mean) ** 2 for v in vals]) / (n - 1)
    return mean, float(np.sqrt(var / n))


def parallel_mc(trials: int, task: Callable, seed: int, workers: int = 1,
                reduce: Callable | None = None) -> McResult:
    """Run ``task(trial_index, stream)`` over trial indices 0..trials-1.

    ``task`` must be picklable when workers > 1 (a module-level function or
    functools.partial of one).  ``reduce``, when given, folds the ordered
    list of successful results with ``pairwise_sum``-style determinism.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    indexed: list = [None] * trials
    if workers <= 1:
        for i in range(trials):
            indexed[i] = _run_one(task, seed, i)[1]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for trial, payload in pool.map(_run_one, [task] * trials,
                                           [seed] * trials, range(trials),
                                           chunksize=max(1, trials // (4 * workers))):
                indexed[trial] = payload
    failures = [r for r in indexed if isinstance(r, TrialFailure)]
    results = [r for r in indexed if not isinstance(r, TrialFailure)]
    aggregate = None
    if reduce is not None and results:
        aggregate = reduce(results)
    return McResult(results=results, failures=failures, aggregate=aggregate)
