"""Turn fuzzy partitions into assignments and score them against truth.

Two assignment rules: the 0.7-cutoff rule used by the simulation
protocol (sub-cutoff blocks keep a FUZZY status) and the plain
maximum-membership rule used on labeled recordings.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Optional, Sequence

import numpy as np

from .clustering import FuzzyPartition
from .exceptions import ConfigError

__all__ = [
    "AssignmentReport",
    "RandReport",
    "SWITCHING",
    "assign",
    "rand_index",
    "simulation_accuracy",
]

# truth tag for blocks that alternate between both regimes
SWITCHING = 2

FUZZY = None  # assignment value for sub-cutoff blocks


@dataclass(frozen=True)
class AssignmentReport:
    """Per-block cluster ids (None = FUZZY) under one assignment rule."""

    assignments: tuple[Optional[int], ...]
    fuzzy_fraction: float
    rule: str
    threshold: Optional[float]

    def hard_labels(self, fuzzy_label: int) -> np.ndarray:
        """Assignments as integers with FUZZY mapped to ``fuzzy_label``."""
        return np.array(
            [fuzzy_label if a is None else a for a in self.assignments], dtype=int
        )


@dataclass(frozen=True)
class RandReport:
    """Simulation-protocol scores of a two-cluster partition."""

    accuracy: float
    rand_index_pure: float
    rand_index_all: float
    n_pure: int
    n_pure_correct: int
    n_switching: int
    n_switching_correct: int
    fuzzy_fraction: float
    threshold: float
    label_map: tuple[int, int]
    pair_counts: tuple[int, int, int]  # (agree-same, agree-diff, disagree)


def assign(
    partition: FuzzyPartition,
    rule: str = "threshold",
    threshold: float = 0.7,
) -> AssignmentReport:
    """Assign each block to a cluster, or to FUZZY under the cutoff rule.

    ``threshold`` rule: block -> argmax cluster iff its maximum
    membership strictly exceeds the cutoff, else FUZZY (equality counts
    as FUZZY).  ``max`` rule: always argmax, ties to the lower cluster
    index.
    """
    e = partition.memberships
    n, c = e.shape
    arg = e.argmax(axis=1)  # argmax takes the lower index on ties
    top = e.max(axis=1)
    if rule == "max":
        assignments = tuple(int(a) for a in arg)
        fuzzy_fraction = 0.0
        thr = None
    elif rule == "threshold":
        if not (1.0 / c < threshold < 1.0):
            raise ConfigError(
                f"threshold must lie in (1/C, 1) = ({1.0 / c:.3f}, 1), got {threshold}"
            )
        assignments = tuple(
            int(a) if t > threshold else None for a, t in zip(arg, top)
        )
        fuzzy_fraction = sum(a is None for a in assignments) / n
        thr = threshold
    else:
        raise ConfigError(f"unknown rule {rule!r}; use 'threshold' or 'max'")
    return AssignmentReport(
        assignments=assignments, fuzzy_fraction=fuzzy_fraction, rule=rule, threshold=thr
    )


def _pair_counts(pred: np.ndarray, truth: np.ndarray) -> tuple[int, int, int]:
    """Exact (agree-same, agree-diff, disagree) pair counts via contingency."""
    n = len(pred)
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    same_both = int((table * (table - 1) // 2).sum())
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    same_pred = int((a * (a - 1) // 2).sum())
    same_truth = int((b * (b - 1) // 2).sum())
    total = n * (n - 1) // 2
    agree_diff = total - same_pred - same_truth + same_both
    disagree = total - same_both - agree_diff
    return same_both, agree_diff, disagree


def rand_index(pred: Sequence[int], truth: Sequence[int]) -> float:
    """Fraction of object pairs on which two labelings agree.

    A pair agrees when both labelings co-cluster it or both separate it;
    the score is label-permutation invariant by construction.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ConfigError(f"label shapes differ: {pred.shape} vs {truth.shape}")
    n = pred.size
    if n < 2:
        raise ConfigError(f"need at least 2 objects, got {n}")
    same, diff, _ = _pair_counts(pred, truth)
    return (same + diff) / (n * (n - 1) // 2)


def simulation_accuracy(
    partition: FuzzyPartition,
    kinds: Sequence[int],
    threshold: float = 0.7,
) -> RandReport:
    """Score a two-cluster partition against pure-0/pure-1/switching truth.

    A pure block counts correct when the cutoff rule assigns it to its
    own cluster (after the accuracy-maximizing 2-permutation match of
    cluster ids to truth); a switching block counts correct when it is
    flagged FUZZY.  Two pair-agreement scores are reported side by side:
    over the pure subset only, and over all blocks with FUZZY/switching
    treated as a third label.
    """
    if partition.n_clusters != 2:
        raise ConfigError(
            f"simulation protocol is binary; partition has C={partition.n_clusters}"
        )
    kinds = np.asarray(kinds, dtype=int)
    if kinds.shape[0] != partition.n_objects:
        raise ConfigError(
            f"{kinds.shape[0]} truth entries for {partition.n_objects} blocks"
        )
    bad = set(np.unique(kinds)) - {0, 1, SWITCHING}
    if bad:
        raise ConfigError(f"truth kinds must be 0, 1 or {SWITCHING}, got extra {sorted(bad)}")

    report = assign(partition, rule="threshold", threshold=threshold)
    pure = kinds != SWITCHING
    switching = ~pure

    best = None  # (n_correct, perm)
    for perm in permutations((0, 1)):
        ok = 0
        for a, k in zip(report.assignments, kinds):
            if k == SWITCHING:
                ok += a is None
            else:
                ok += a is not None and perm[a] == k
        if best is None or ok > best[0]:
            best = (ok, perm)
    n_correct, perm = best

    n_pure_correct = sum(
        a is not None and perm[a] == k
        for a, k in zip(report.assignments, kinds)
        if k != SWITCHING
    )
    n_switch_correct = sum(
        a is None for a, k in zip(report.assignments, kinds) if k == SWITCHING
    )

    # FUZZY becomes its own label for pair counting (id 2 is free: C = 2)
    hard = report.hard_labels(fuzzy_label=2)
    ri_all = rand_index(hard, kinds) if len(kinds) >= 2 else 1.0
    if pure.sum() >= 2:
        ri_pure = rand_index(hard[pure], kinds[pure])
        counts = _pair_counts(hard[pure], kinds[pure])
        pair_counts = (counts[0], counts[1], counts[2])
    else:
        ri_pure = 1.0
        pair_counts = (0, 0, 0)

    return RandReport(
        accuracy=n_correct / len(kinds),
        rand_index_pure=ri_pure,
        rand_index_all=ri_all,
        n_pure=int(pure.sum()),
        n_pure_correct=int(n_pure_correct),
        n_switching=int(switching.sum()),
        n_switching_correct=int(n_switch_correct),
        fuzzy_fraction=report.fuzzy_fraction,
        threshold=threshold,
        label_map=perm,
        pair_counts=pair_counts,
    )
