"""Frequency-vector attributors used for comparison: Burrows Delta and PCA."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import FrequencyVector
from .entropy import AttributionReport, rank_scores
from .errors import EmptyAuthorCanon, InsufficientTraining, InvalidParameter, RankDeficient

METRICS = ("manhattan", "euclidean", "cosine")


def _matrix(vectors: Sequence[FrequencyVector]) -> np.ndarray:
    rows = [v.relative for v in vectors]
    sizes = {r.size for r in rows}
    if len(sizes) > 1:
        raise InvalidParameter(f"frequency vectors of different lengths: {sorted(sizes)}")
    return np.vstack(rows) if rows else np.zeros((0, 0))


@dataclass(frozen=True, eq=False)
class ZScoreModel:
    mean: np.ndarray
    std: np.ndarray
    dropped: frozenset[int]

    @property
    def n_words(self):
        return self.mean.size

    def transform(self, x) -> np.ndarray:
        """Z-scores of relative frequencies; dropped words score 0."""
        if isinstance(x, FrequencyVector):
            x = x.relative
        x = np.asarray(x, dtype=np.float64)
        safe = np.where(self.std > 0, self.std, 1.0)
        z = (x - self.mean) / safe
        if self.dropped:
            z[..., sorted(self.dropped)] = 0.0
        return z


def zscore_fit(training: Sequence[FrequencyVector]) -> ZScoreModel:
    if len(training) < 2:
        raise InsufficientTraining(f"z-scores need at least 2 training texts, got {len(training)}")
    x = _matrix(training)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    constant = np.ptp(x, axis=0) == 0
    std[constant] = 0.0
    return ZScoreModel(mean, std, frozenset(np.flatnonzero(constant).tolist()))


def distance(a: np.ndarray, b: np.ndarray, metric: str) -> np.ndarray:
    """Distance from ``a`` to each row of ``b``.

    euclidean is the squared sum; cosine is ``1 - cos`` (1 when either
    vector is zero).
    """
    b = np.atleast_2d(b)
    if metric == "manhattan":
        return np.abs(b - a).sum(axis=1)
    if metric == "euclidean":
        return ((b - a) ** 2).sum(axis=1)
    if metric == "cosine":
        na = np.linalg.norm(a)
        nb = np.linalg.norm(b, axis=1)
        denom = na * nb
        cos = np.divide(b @ a, denom, out=np.zeros(b.shape[0]), where=denom > 0)
        return 1.0 - cos
    raise InvalidParameter(f"unknown metric {metric!r}; expected one of {METRICS}")


def _check_known(known):
    if not known:
        raise EmptyAuthorCanon("no candidate authors given")
    for author, plays in known.items():
        if not plays:
            raise EmptyAuthorCanon(f"author {author!r} has no known texts")


def delta_attribute(target: FrequencyVector, known: Mapping[str, Sequence[FrequencyVector]],
                    metric: str = "manhattan", model: ZScoreModel | None = None,
                    text_id: str = "", true_author=None) -> AttributionReport:
    """Burrows Delta: mean z-score distance to each author's known texts.

    When ``model`` is omitted it is fitted on all known texts (the target is
    never part of ``known``).
    """
    _check_known(known)
    if metric not in METRICS:
        raise InvalidParameter(f"unknown metric {metric!r}; expected one of {METRICS}")
    if model is None:
        model = zscore_fit([v for vs in known.values() for v in vs])
    zt = model.transform(target)
    scores = {a: float(distance(zt, model.transform(_matrix(vs)), metric).mean())
              for a, vs in known.items()}
    return rank_scores(text_id, scores, method=f"delta-{metric}", unit="distance",
                       true_author=true_author)


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def k(self):
        return self.components.shape[0]

    def transform(self, x) -> np.ndarray:
        if isinstance(x, FrequencyVector):
            x = x.relative
        return (np.asarray(x, dtype=np.float64) - self.mean) @ self.components.T

    def inverse_transform(self, scores) -> np.ndarray:
        return np.asarray(scores) @ self.components + self.mean


def pca_fit(training: Sequence[FrequencyVector] | np.ndarray, k: int) -> PcaModel:
    """Top-``k`` principal axes of mean-centred relative frequencies.

    Each axis is signed so its largest-magnitude entry is positive.
    Variances use the ``N - 1`` divisor.
    """
    x = training if isinstance(training, np.ndarray) else _matrix(training)
    x = np.asarray(x, dtype=np.float64)
    n_texts, n_words = x.shape
    if n_texts < 2:
        raise InsufficientTraining(f"PCA needs at least 2 training texts, got {n_texts}")
    if k < 1:
        raise InvalidParameter(f"k must be positive, got {k}")
    mean = x.mean(axis=0)
    _, s, vt = np.linalg.svd(x - mean, full_matrices=False)
    tol = (s[0] if s.size else 0.0) * max(x.shape) * np.finfo(float).eps
    rank = int((s > tol).sum())
    if k > rank:
        raise RankDeficient(f"k={k} exceeds the rank {rank} of the centred training data")
    comps = vt[:k].copy()
    lead = np.abs(comps).argmax(axis=1)
    comps *= np.sign(comps[np.arange(k), lead])[:, None]
    return PcaModel(mean, comps, s[:k] ** 2 / (n_texts - 1))


def pca_attribute(target: FrequencyVector, known: Mapping[str, Sequence[FrequencyVector]],
                  model: PcaModel | None = None, k: int = 4, text_id: str = "",
                  true_author=None) -> AttributionReport:
    """Attribute to the author whose PC scores lie at the smallest mean
    Euclidean distance from the target's."""
    _check_known(known)
    if model is None:
        model = pca_fit([v for vs in known.values() for v in vs], k)
    t = model.transform(target)
    scores = {a: float(np.linalg.norm(model.transform(_matrix(vs)) - t, axis=1).mean())
              for a, vs in known.items()}
    return rank_scores(text_id, scores, method=f"pca-{model.k}", unit="distance",
                       true_author=true_author)
