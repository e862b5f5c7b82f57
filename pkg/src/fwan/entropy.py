"""Relative entropy between Markov chains and the attribution rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, MissingCandidates
from .wan import MarkovChain

SUPPORTS = ("full", "profile", "common")
TIE_TOL = 1e-12


@dataclass(frozen=True)
class EntropyValue:
    nats: float

    @property
    def centinats(self) -> float:
        return 100.0 * self.nats

    def __sub__(self, other):
        if isinstance(other, EntropyValue):
            return EntropyValue(self.nats - other.nats)
        return NotImplemented

    def __lt__(self, other):
        return self.nats < other.nats


def common_support(chains: Sequence[MarkovChain]) -> np.ndarray:
    """Transitions that are non-zero in every chain."""
    if not chains:
        raise MissingCandidates("common support needs at least one candidate chain")
    mask = chains[0].p != 0
    for c in chains[1:]:
        if c.p.shape != mask.shape:
            raise DimensionMismatch(f"chain of size {c.n} among chains of size {mask.shape[0]}")
        mask = mask & (c.p != 0)
    return mask


def relative_entropy(p1: MarkovChain, p2: MarkovChain, support: str = "common",
                     candidates: Sequence[MarkovChain] | None = None,
                     mask: np.ndarray | None = None) -> EntropyValue:
    """Sum of ``pi_i p1_ij log(p1_ij / p2_ij)`` over the chosen support.

    ``pi`` is the limiting distribution of ``p1``.  With ``support="full"``
    the result is ``inf`` whenever ``p1`` puts mass where ``p2`` has none;
    ``"profile"`` drops transitions absent from ``p2``; ``"common"`` keeps only
    transitions present in every chain of ``candidates`` (which must include
    ``p2``).  A precomputed common-support ``mask`` may be passed instead of
    ``candidates``.
    """
    if p1.p.shape != p2.p.shape:
        raise DimensionMismatch(f"chains of size {p1.n} and {p2.n}")
    if support not in SUPPORTS:
        raise InvalidParameter(f"unknown support {support!r}; expected one of {SUPPORTS}")
    a, b = p1.p, p2.p
    if support == "full":
        if ((a > 0) & (b == 0)).any():
            return EntropyValue(math.inf)
        keep = b != 0
    elif support == "profile":
        keep = b != 0
    else:
        if mask is None:
            if candidates is None:
                raise MissingCandidates("support='common' requires the candidate chains")
            if not any(c is p2 or np.array_equal(c.p, p2.p) for c in candidates):
                raise MissingCandidates("the compared chain must be one of the candidates")
            mask = common_support(candidates)
        elif mask.shape != a.shape:
            raise DimensionMismatch(f"support mask {mask.shape} for chains of size {p1.n}")
        keep = mask
    keep = keep & (a > 0)
    rows, cols = np.nonzero(keep)
    pa = a[rows, cols]
    terms = p1.pi[rows] * pa * np.log(pa / b[rows, cols])
    return EntropyValue(float(terms.sum()))


def discount(raw: Mapping[str, EntropyValue], average_entropy: EntropyValue) -> dict[str, EntropyValue]:
    """Shift every value by the entropy against the pooled (average) profile."""
    return {k: v - average_entropy for k, v in raw.items()}


@dataclass(frozen=True)
class CandidateScore:
    raw: float
    discounted: float | None = None

    @property
    def value(self):
        return self.raw if self.discounted is None else self.discounted


@dataclass(frozen=True)
class AttributionReport:
    """Per-candidate scores for one text, smallest score first.

    For network attribution the scores are relative entropies in nats
    (``unit="nats"``); the baselines store distances (``unit="distance"``).
    """

    text_id: str
    per_candidate: dict[str, CandidateScore]
    ranking: tuple[str, ...]
    margin: float
    tie: bool = False
    method: str = "wan"
    unit: str = "nats"
    true_author: str | None = None
    meta: dict = field(default_factory=dict)

    @property
    def winner(self) -> str:
        return self.ranking[0]

    @property
    def correct(self) -> bool | None:
        if self.true_author is None:
            return None
        return self.winner == self.true_author

    def raw(self, author) -> float:
        return self.per_candidate[author].raw

    def score(self, author) -> float:
        return self.per_candidate[author].value

    def centinats(self, author, discounted: bool = True) -> float:
        s = self.per_candidate[author]
        v = s.discounted if discounted and s.discounted is not None else s.raw
        return 100.0 * v

    def signed_margin(self, first: str, second: str) -> float:
        """score(second) - score(first): positive when ``first`` is closer."""
        return self.score(second) - self.score(first)

    def to_dict(self) -> dict:
        out = {
            "text_id": self.text_id,
            "method": self.method,
            "unit": self.unit,
            "winner": self.winner,
            "ranking": list(self.ranking),
            "tie": self.tie,
            "candidates": {},
        }
        scale = 100.0 if self.unit == "nats" else 1.0
        key = "cn" if self.unit == "nats" else "distance"
        out[f"margin_{key}"] = _fmt(scale * self.margin)
        for a in self.ranking:
            s = self.per_candidate[a]
            entry = {f"raw_{key}": _fmt(scale * s.raw)}
            if s.discounted is not None:
                entry[f"discounted_{key}"] = _fmt(scale * s.discounted)
            out["candidates"][a] = entry
        if self.true_author is not None:
            out["true_author"] = self.true_author
            out["correct"] = self.correct
        out.update({k: v for k, v in self.meta.items() if k not in out})
        return out


def _fmt(x: float):
    if math.isinf(x) or math.isnan(x):
        return str(x)
    return round(x, 4) + 0.0


def rank_scores(text_id: str, raw: Mapping[str, float], discounted: Mapping[str, float] | None = None,
                **kwargs) -> AttributionReport:
    """Build a report from raw (and optionally discounted) scores.

    Ranking uses the discounted values when given.  Scores within
    ``TIE_TOL`` of the best are tied; ties go to the lexicographically
    smallest name and the report is flagged.
    """
    if not raw:
        raise InvalidParameter("no candidates to rank")
    per = {a: CandidateScore(float(raw[a]), None if discounted is None else float(discounted[a]))
           for a in raw}
    ranking = tuple(sorted(per, key=lambda a: (per[a].value, a)))
    best = per[ranking[0]].value
    tied = [a for a in ranking if _close(per[a].value, best)]
    tie = len(tied) > 1
    if tie:
        ranking = tuple(sorted(tied)) + tuple(a for a in ranking if a not in tied)
    if len(ranking) > 1:
        second = per[ranking[1]].value
        margin = 0.0 if _close(second, best) else second - best
    else:
        margin = 0.0
    return AttributionReport(text_id, per, ranking, margin, tie, **kwargs)


def _close(a, b):
    if a == b:
        return True
    return abs(a - b) < TIE_TOL


def attribute(text_chain: MarkovChain, profiles: Mapping[str, MarkovChain], support: str = "common",
              average: MarkovChain | None = None, text_id: str = "", true_author=None) -> AttributionReport:
    """Assign a text to the profile of smallest relative entropy.

    If ``average`` (the pooled profile of all candidates) is given, every
    entropy is also reported discounted by the entropy against it.
    """
    if len(profiles) < 2:
        raise InvalidParameter("attribution needs at least two candidate profiles")
    chains = list(profiles.values())
    for c in chains:
        if c.p.shape != text_chain.p.shape:
            raise DimensionMismatch(f"profile of size {c.n} for a text of size {text_chain.n}")
    mask = common_support(chains) if support == "common" else None
    raw = {a: relative_entropy(text_chain, c, support, mask=mask).nats for a, c in profiles.items()}
    disc = None
    if average is not None:
        avg = relative_entropy(text_chain, average, support, mask=mask)
    if average is not None and math.isfinite(avg.nats):
        disc = {a: v.nats for a, v in discount({a: EntropyValue(x) for a, x in raw.items()}, avg).items()}
    return rank_scores(text_id, raw, disc, true_author=true_author)
