"""Elastic matching of feature sequences and the per-user reference-set model.

The matcher is classical DTW (steps (i-1,j), (i,j-1), (i-1,j-1); Euclidean
local cost across channels) with the cumulative path cost divided by
len(a) + len(b) so scores stay comparable across resample lengths.

A user's model is the set of enrollment feature sequences plus the mean and
population std of their pairwise DTW distances; a probe's score is its
minimum distance to any reference divided by that mean (target-dependent
normalization). Models are immutable values: updates return a new model.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .errors import ChannelMismatch, WrongReferenceCount

MODEL_VERSION = "dtw-ref-1"
DEFAULT_REF_COUNT = 5
SCORE_EPS = 1e-6

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def _accumulate(cost):
    """DP over the local-cost matrix; returns the cumulative cost at the corner."""
    n, m = cost.shape
    acc = np.empty((n, m))
    acc[0, 0] = cost[0, 0]
    for i in range(1, n):
        acc[i, 0] = cost[i, 0] + acc[i - 1, 0]
    for j in range(1, m):
        acc[0, j] = cost[0, j] + acc[0, j - 1]
    for i in range(1, n):
        for j in range(1, m):
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = cost[i, j] + best
    return acc[n - 1, m - 1]


if _HAVE_NUMBA:
    _accumulate = njit(cache=True, nogil=True)(_accumulate)


def _check_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("sequences must be non-empty (length, channels) arrays")
    if a.shape[1] != b.shape[1]:
        raise ChannelMismatch(f"{a.shape[1]} channels vs {b.shape[1]}")
    return a, b


def dtw_path_cost(a: np.ndarray, b: np.ndarray) -> float:
    """Cumulative cost of the best monotone alignment path (unnormalized)."""
    a, b = _check_pair(a, b)
    diff = a[:, None, :] - b[None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=-1))
    return float(_accumulate(cost))


def dtw_distance(a: np.ndarray, b: np.ndarray) -> float:
    """DTW distance normalized by the combined sequence length."""
    return dtw_path_cost(a, b) / (len(a) + len(b))


@dataclass(frozen=True)
class UserModel:
    refs: tuple[np.ndarray, ...]
    mu_ref: float
    sigma_ref: float
    version: str = MODEL_VERSION
    updated_at: float = 0.0


@dataclass(frozen=True)
class MatchScore:
    raw_min: float
    normalized: float
    accepted: bool


def pairwise_reference_stats(refs) -> tuple[float, float]:
    """Mean and population std of all pairwise DTW distances among refs."""
    dists = [dtw_distance(a, b) for a, b in itertools.combinations(refs, 2)]
    return float(np.mean(dists)), float(np.std(dists))


def build_model(refs, r: int = DEFAULT_REF_COUNT, now: float = 0.0) -> UserModel:
    """Build a user model from exactly r enrollment feature sequences."""
    refs = tuple(np.asarray(ref, dtype=np.float64) for ref in refs)
    if len(refs) != r:
        raise WrongReferenceCount(f"need {r} references, got {len(refs)}")
    channels = {ref.shape[1] for ref in refs}
    if len(channels) != 1:
        raise ChannelMismatch(f"mixed channel counts {sorted(channels)}")
    mu, sigma = pairwise_reference_stats(refs)
    return UserModel(refs=refs, mu_ref=mu, sigma_ref=sigma, updated_at=now)


def score(
    model: UserModel,
    probe: np.ndarray,
    threshold: float,
    eps: float = SCORE_EPS,
) -> MatchScore:
    """Score a probe against a model; accepted iff normalized <= threshold."""
    raw_min = min(dtw_distance(probe, ref) for ref in model.refs)
    normalized = raw_min / (model.mu_ref + eps)
    return MatchScore(raw_min=raw_min, normalized=normalized, accepted=normalized <= threshold)


def update_model(model: UserModel, accepted_probe: np.ndarray, now: float = 0.0) -> UserModel:
    """Replace the oldest reference with an accepted probe (FIFO) and recompute stats."""
    probe = np.asarray(accepted_probe, dtype=np.float64)
    refs = model.refs[1:] + (probe,)
    mu, sigma = pairwise_reference_stats(refs)
    return replace(model, refs=refs, mu_ref=mu, sigma_ref=sigma, updated_at=now)


def model_to_dict(model: UserModel) -> dict:
    return {
        "version": model.version,
        "refs": [ref.tolist() for ref in model.refs],
        "mu_ref": model.mu_ref,
        "sigma_ref": model.sigma_ref,
        "updated_at": model.updated_at,
    }


def model_from_dict(doc: dict) -> UserModel:
    return UserModel(
        refs=tuple(np.asarray(ref, dtype=np.float64) for ref in doc["refs"]),
        mu_ref=float(doc["mu_ref"]),
        sigma_ref=float(doc["sigma_ref"]),
        version=doc["version"],
        updated_at=float(doc["updated_at"]),
    )
