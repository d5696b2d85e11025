"""Lagged rank-dependence matrices of filtered blocks.

For each lag the block-level dependence matrix holds, entrywise, the
sine-transformed Kendall tau between one channel and a lag-shifted
other channel.  Tau uses the tau-a convention (ties add zero
concordance) over all sample pairs, so every entry is invariant under
strictly monotone channel transforms and bounded regardless of heavy
tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError, NumericError
from .mts import MtsBlock

__all__ = [
    "kendall_tau",
    "sine_transform",
    "dependence_set",
    "repair_psd",
    "LaggedDependenceSet",
]


# ---------------------------------------------------------------------------
# scalar Kendall tau, O(n log n)
# ---------------------------------------------------------------------------

def _merge_count(a: list) -> tuple[list, int]:
    """Merge-sort that counts strict inversions (a[i] > a[j] for i < j)."""
    n = len(a)
    if n <= 1:
        return a, 0
    mid = n // 2
    left, cl = _merge_count(a[:mid])
    right, cr = _merge_count(a[mid:])
    merged = []
    inv = cl + cr
    i = j = 0
    nl = len(left)
    while i < nl and j < len(right):
        if left[i] <= right[j]:  # ties go left first: not an inversion
            merged.append(left[i])
            i += 1
        else:
            inv += nl - i
            merged.append(right[j])
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged, inv


def _tie_pair_count(sorted_vals: np.ndarray) -> int:
    """Number of index pairs with equal values, input sorted."""
    _, counts = np.unique(sorted_vals, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def concordant_minus_discordant(x: np.ndarray, y: np.ndarray) -> int:
    """Exact integer (#concordant - #discordant) over all unordered pairs.

    Sorts by (x, y), counts discordant pairs as strict inversions of the
    y sequence via merge sort, and removes tied pairs by inclusion-
    exclusion.  Equals the brute-force sum of sign(dx)*sign(dy) exactly,
    ties included.
    """
    n = len(x)
    order = np.lexsort((y, x))
    xs = x[order]
    ys = y[order]
    _, discordant = _merge_count(list(ys))
    n0 = n * (n - 1) // 2
    ties_x = _tie_pair_count(xs)
    ties_y = _tie_pair_count(np.sort(y))
    # pairs tied in both coordinates (joint ties)
    joint = np.rec.fromarrays([xs, ys])
    ties_both = _tie_pair_count(joint)
    return n0 - ties_x - ties_y + ties_both - 2 * discordant


def kendall_tau(x, y) -> float:
    """Kendall's tau-a of two equal-length series.

    Returns (#concordant - #discordant) / C(n, 2) over all unordered
    index pairs; tied pairs contribute zero.  Computed by an
    O(n log n) inversion count that matches the O(n^2) definition
    exactly.  A constant input series yields 0.0 (degenerate case).

    Raises
    ------
    DataError
        If the series lengths differ or n < 2.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"need two equal-length 1-D series, got {x.shape} and {y.shape}")
    n = x.size
    if n < 2:
        raise DataError(f"need at least 2 observations, got {n}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        return 0.0
    return concordant_minus_discordant(x, y) / (n * (n - 1) // 2)


def sine_transform(tau: float) -> float:
    """Map a rank correlation to the elliptical-model linear scale.

    sin(pi * tau / 2): odd, monotone, fixes 0 and +-1.
    """
    if not -1.0 <= tau <= 1.0:
        raise DataError(f"tau must lie in [-1, 1], got {tau}")
    return math.sin(math.pi * tau / 2.0)


# ---------------------------------------------------------------------------
# block-level lagged dependence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaggedDependenceSet:
    """Dependence matrices for lags -L..L with XX/XY/YX/YY block views.

    Entries lie in [-1, 1]; the matrix at -l is the transpose of the one
    at l; the lag-0 matrix is symmetric with unit diagonal.
    ``degenerate_channels`` lists constant channels whose entries were
    zeroed.
    """

    max_lag: int
    p: int
    q: int
    matrices: dict[int, np.ndarray]
    degenerate_channels: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        m = self.p + self.q
        mats = {}
        for lag in range(-self.max_lag, self.max_lag + 1):
            if lag not in self.matrices:
                raise DataError(f"missing matrix for lag {lag}")
            a = np.ascontiguousarray(self.matrices[lag], dtype=np.float64)
            if a.shape != (m, m):
                raise DataError(f"lag {lag} matrix has shape {a.shape}, expected ({m},{m})")
            if np.abs(a).max() > 1.0 + 1e-12:
                raise DataError(f"lag {lag} matrix has entries outside [-1, 1]")
            a.flags.writeable = False
            mats[lag] = a
        p0 = mats[0]
        if not np.array_equal(p0, p0.T):
            raise DataError("lag-0 matrix must be symmetric")
        if not np.all(np.diag(p0) == 1.0):
            raise DataError("lag-0 matrix must have unit diagonal")
        for lag in range(1, self.max_lag + 1):
            if not np.array_equal(mats[-lag], mats[lag].T):
                raise DataError(f"matrix at lag {-lag} must equal the transpose at lag {lag}")
        object.__setattr__(self, "matrices", mats)

    def matrix(self, lag: int) -> np.ndarray:
        return self.matrices[lag]

    def xx(self, lag: int) -> np.ndarray:
        return self.matrices[lag][: self.p, : self.p]

    def xy(self, lag: int) -> np.ndarray:
        return self.matrices[lag][: self.p, self.p :]

    def yx(self, lag: int) -> np.ndarray:
        return self.matrices[lag][self.p :, : self.p]

    def yy(self, lag: int) -> np.ndarray:
        return self.matrices[lag][self.p :, self.p :]

    def to_json_dict(self, block_index: int) -> dict:
        return {
            "block": block_index,
            "max_lag": self.max_lag,
            "matrices": {str(l): self.matrices[l].tolist() for l in sorted(self.matrices)},
            "degenerate_channels": list(self.degenerate_channels),
        }


def _pairwise_sign_tensor(data: np.ndarray) -> np.ndarray:
    """Per-channel pairwise sign matrices, shape (channels, T, T).

    Entry [c, t, s] = sign(data[t, c] - data[s, c]).  float64 so the
    downstream matmul accumulates exact small integers.
    """
    diff = data[:, None, :] - data[None, :, :]  # (T, T, m)
    return np.ascontiguousarray(np.moveaxis(np.sign(diff), -1, 0))


def lagged_tau_matrices(data: np.ndarray, max_lag: int) -> dict[int, np.ndarray]:
    """All-pairs tau-a matrices for lags 0..max_lag, vectorized.

    entry[j, k] at lag l is the tau of (data[t, j], data[t + l, k]) over
    the aligned T - l samples, computed from pairwise sign products.
    Exactly equals per-entry ``kendall_tau`` (integer accumulation).
    """
    T = data.shape[0]
    m = data.shape[1]
    S = _pairwise_sign_tensor(data)
    out = {}
    for lag in range(max_lag + 1):
        n = T - lag
        head = np.ascontiguousarray(S[:, :n, :n]).reshape(m, -1)
        tail = np.ascontiguousarray(S[:, lag:, lag:]).reshape(m, -1)
        num = head @ tail.T  # (m, m); twice the pair sum, diagonal excluded
        out[lag] = num / (n * (n - 1))
    return out


def dependence_set(block: MtsBlock, max_lag: int = 5) -> LaggedDependenceSet:
    """Estimate the block's lagged sine-tau dependence matrices.

    For lag l >= 0 and channels (j, k) the entry is
    sin(pi/2 * tau(Z_j(t), Z_k(t + l))) over the T - l aligned samples;
    negative lags are filled by transposition and the lag-0 diagonal is
    forced to exactly 1.  Constant channels produce zero entries and are
    flagged rather than raising.
    """
    if max_lag < 0:
        raise DataError(f"max_lag must be >= 0, got {max_lag}")
    T = block.n_samples
    if T - max_lag < 8:
        raise DataError(
            f"block too short: {T} samples leave {T - max_lag} aligned pairs "
            f"at lag {max_lag}, need at least 8"
        )
    data = block.data
    degenerate = tuple(
        int(c) for c in range(block.n_channels)
        if np.all(data[:, c] == data[0, c])
    )
    taus = lagged_tau_matrices(data, max_lag)
    mats: dict[int, np.ndarray] = {}
    for lag, tau in taus.items():
        entry = np.sin(np.pi / 2.0 * tau)
        if lag == 0:
            entry = (entry + entry.T) / 2.0  # symmetric up to roundoff already
            np.fill_diagonal(entry, 1.0)
            if degenerate:
                idx = list(degenerate)
                entry[idx, :] = 0.0
                entry[:, idx] = 0.0
                entry[idx, idx] = 1.0
        mats[lag] = entry
        if lag > 0:
            mats[-lag] = entry.T.copy()
    return LaggedDependenceSet(
        max_lag=max_lag, p=block.p, q=block.q,
        matrices=mats, degenerate_channels=degenerate,
    )


# ---------------------------------------------------------------------------
# positive-semidefinite repair
# ---------------------------------------------------------------------------

def repair_psd(matrix: np.ndarray, eps: float = 1e-8, max_iter: int = 100) -> np.ndarray:
    """Nearest-style PSD repair: clip eigenvalues, restore the diagonal.

    Eigenvalues below ``eps`` are clipped up to ``eps`` and the diagonal
    is rescaled back to its pre-repair values (a congruence with a
    positive diagonal, so semidefiniteness is preserved).  The clip and
    rescale iterate until the minimum eigenvalue clears ``eps``, which
    makes the operation exactly idempotent: an already-repaired matrix
    is returned unchanged.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f"need a square matrix, got shape {a.shape}")
    if np.abs(a - a.T).max() > 1e-10:
        raise DataError("matrix is not symmetric within 1e-10")
    diag0 = np.diag(a).copy()
    if np.any(diag0 <= 0):
        raise DataError("PSD repair requires a strictly positive diagonal")
    out = a
    for _ in range(max_iter):
        try:
            w, v = np.linalg.eigh(out)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigendecomposition failed during PSD repair: {exc}") from exc
        if w.min() >= eps:
            return out
        w = np.clip(w, eps, None)
        out = (v * w) @ v.T
        out = (out + out.T) / 2.0
        scale = np.sqrt(diag0 / np.diag(out))
        out = out * np.outer(scale, scale)
        out = (out + out.T) / 2.0
    raise NumericError(f"PSD repair did not converge in {max_iter} iterations")
