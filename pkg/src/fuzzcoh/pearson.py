"""Non-robust linear-correlation foil for the rank dependence path.

Swaps sine-tau entries for lagged sample Pearson correlations with an
otherwise identical contract, so filtering, the canonical solver,
clustering and evaluation are shared code paths and any performance gap
isolates the dependence estimator.
"""

from __future__ import annotations

import numpy as np

from .dependence import LaggedDependenceSet
from .exceptions import DataError
from .mts import MtsBlock

__all__ = ["pearson_dependence_set"]


def _lagged_correlation(data: np.ndarray, lag: int) -> np.ndarray:
    """corr(Z_j(t), Z_k(t + lag)) over the aligned samples, per (j, k)."""
    n = data.shape[0] - lag
    head = data[:n]
    tail = data[lag:]
    hm = head - head.mean(axis=0)
    tm = tail - tail.mean(axis=0)
    hs = np.sqrt((hm * hm).sum(axis=0))
    ts = np.sqrt((tm * tm).sum(axis=0))
    hs_safe = np.where(hs == 0, 1.0, hs)
    ts_safe = np.where(ts == 0, 1.0, ts)
    corr = (hm / hs_safe).T @ (tm / ts_safe)
    corr[hs == 0, :] = 0.0
    corr[:, ts == 0] = 0.0
    return np.clip(corr, -1.0, 1.0)


def pearson_dependence_set(block: MtsBlock, max_lag: int = 5) -> LaggedDependenceSet:
    """Lagged Pearson analogue of the rank dependence set.

    Same shape, symmetry and degeneracy contract: negative lags by
    transposition, exact unit diagonal at lag 0, constant channels give
    zero entries and a degeneracy flag.
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
    mats: dict[int, np.ndarray] = {}
    for lag in range(max_lag + 1):
        corr = _lagged_correlation(data, lag)
        if lag == 0:
            corr = (corr + corr.T) / 2.0
            np.fill_diagonal(corr, 1.0)
        mats[lag] = corr
        if lag > 0:
            mats[-lag] = corr.T.copy()
    return LaggedDependenceSet(
        max_lag=max_lag, p=block.p, q=block.q,
        matrices=mats, degenerate_channels=degenerate,
    )
