"""Synthetic playwrights: first-order Markov generators over function words
plus one filler class, used for desk-scale benchmarks.

State ``k < n`` emits the k-th lexicon word; state ``n`` emits a random
filler word from a pool disjoint from the lexicon.  Word popularity follows
a Zipf law in lexicon order so prefixes are "most common first".  Each
author multiplies a shared base transition matrix by its own log-normal
noise.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .corpus import Act, PlayDocument, Scene, Speech
from .errors import InvalidParameter, RankDeficient

log = logging.getLogger(__name__)

MEAN_SPEECH = 40
FILLER_POOL = 400


@dataclass(frozen=True, eq=False)
class SyntheticAuthor:
    name: str
    words: tuple[str, ...]
    transitions: np.ndarray  # (n+1, n+1); last state is filler

    @property
    def n(self):
        return len(self.words)


def function_word_subchain(t: np.ndarray) -> np.ndarray:
    """Chain observed on function-word states only (filler runs censored)."""
    n = t.shape[0] - 1
    direct = t[:n, :n]
    via = np.outer(t[:n, n], t[n, :n]) / (1.0 - t[n, n])
    return direct + via


def _stationary(p):
    w, v = np.linalg.eig(p.T)
    k = np.argmin(np.abs(w - 1.0))
    pi = np.abs(np.real(v[:, k]))
    return pi / pi.sum()


def generator_divergence(a: SyntheticAuthor | np.ndarray, b: SyntheticAuthor | np.ndarray) -> float:
    """Relative entropy rate (nats) between the function-word sub-chains."""
    ta = a.transitions if isinstance(a, SyntheticAuthor) else a
    tb = b.transitions if isinstance(b, SyntheticAuthor) else b
    pa, pb = function_word_subchain(ta), function_word_subchain(tb)
    pi = _stationary(pa)
    return float(np.sum(pi[:, None] * pa * np.log(pa / pb)))


def _base_matrix(n, rng, filler=0.5, zipf=1.0, shape=0.6):
    pop = 1.0 / np.arange(1, n + 1) ** zipf
    t = np.empty((n + 1, n + 1))
    g = pop * np.exp(shape * rng.standard_normal((n, n)))
    t[:n, :n] = (1.0 - filler) * g / g.sum(axis=1, keepdims=True)
    t[:n, n] = filler
    t[n, :n] = (1.0 - filler - 0.1) * pop / pop.sum()
    t[n, n] = filler + 0.1
    return t


def _stationary_of(n, filler=0.5, zipf=1.0):
    pop = 1.0 / np.arange(1, n + 1) ** zipf
    return np.append((1.0 - filler) * pop / pop.sum(), filler)


def _symmetric_fit(w, target, iters=5000, tol=1e-13):
    """Scale symmetric ``w`` to ``D w D`` with row sums ``target``."""
    d = np.sqrt(target / w.sum(axis=1))
    for _ in range(iters):
        new = np.sqrt(d * target / (w @ d))
        if np.abs(new - d).max() < tol:
            d = new
            break
        d = new
    return d[:, None] * w * d[None, :]


def _reversible(pi, log_weights):
    """Reversible transition matrix with stationary law ``pi``."""
    sym = (log_weights + log_weights.T) / 2.0
    w = _symmetric_fit(np.outer(pi, pi) * np.exp(sym), pi)
    t = w / w.sum(axis=1, keepdims=True)
    return t


def make_authors(n_authors: int, words: Sequence[str], seed: int = 0, sigma: float = 0.35,
                 distinct: int | None = None, min_divergence: float = 0.05,
                 names: Sequence[str] | None = None, adjacency_only: bool = False) -> list[SyntheticAuthor]:
    """Authors whose pairwise sub-chain divergence is at least ``min_divergence``.

    ``distinct`` limits authorial variation to transitions among the first
    ``distinct`` words; all other transitions are shared.  With
    ``adjacency_only`` every author has the same stationary word
    frequencies and differs only in which words follow which.  The noise
    scale grows from ``sigma`` until the divergence floor holds.
    """
    if adjacency_only:
        return _adjacency_authors(n_authors, words, seed, sigma, min_divergence, names)
    n = len(words)
    if n < 2:
        raise InvalidParameter("synthetic authors need at least two function words")
    names = list(names) if names is not None else [f"author{k + 1}" for k in range(n_authors)]
    if len(names) != n_authors:
        raise InvalidParameter("one name per author is required")
    rng = np.random.default_rng(seed)
    base = _base_matrix(n, rng)
    noise = rng.standard_normal((n_authors, n + 1, n + 1))
    mask = np.ones((n + 1, n + 1))
    if distinct is not None:
        mask[:] = 0.0
        mask[:distinct, :distinct] = 1.0
    scale = sigma
    for _ in range(40):
        mats = []
        for k in range(n_authors):
            t = base * np.exp(scale * mask * noise[k])
            if distinct is not None:
                # keep the mass leaving each row for shared transitions fixed
                rows = slice(0, distinct)
                inside = base[rows, :distinct].sum(axis=1, keepdims=True)
                t[rows, :distinct] *= inside / t[rows, :distinct].sum(axis=1, keepdims=True)
            mats.append(t / t.sum(axis=1, keepdims=True))
        authors = [SyntheticAuthor(names[k], tuple(words), mats[k]) for k in range(n_authors)]
        if n_authors < 2 or min_divergence <= 0:
            return authors
        worst = min(generator_divergence(a, b) for a in authors for b in authors if a is not b)
        if worst >= min_divergence:
            return authors
        scale *= 1.25
    raise InvalidParameter("could not reach the requested generator divergence")


def _adjacency_authors(n_authors, words, seed, sigma, min_divergence, names):
    n = len(words)
    names = list(names) if names is not None else [f"author{k + 1}" for k in range(n_authors)]
    rng = np.random.default_rng(seed)
    pi = _stationary_of(n)
    shared = 0.6 * rng.standard_normal((n + 1, n + 1))
    noise = rng.standard_normal((n_authors, n + 1, n + 1))
    scale = sigma
    for _ in range(40):
        authors = [SyntheticAuthor(names[k], tuple(words), _reversible(pi, shared + scale * noise[k]))
                   for k in range(n_authors)]
        if n_authors < 2 or min_divergence <= 0:
            return authors
        worst = min(generator_divergence(a, b) for a in authors for b in authors if a is not b)
        if worst >= min_divergence:
            return authors
        scale *= 1.25
    raise InvalidParameter("could not reach the requested generator divergence")


def filler_words(count: int = FILLER_POOL) -> np.ndarray:
    return np.array([f"zz{k:03d}" for k in range(count)], dtype=object)


def sample_tokens(author: SyntheticAuthor, n_tokens: int, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(author.transitions, axis=1)
    start = int(rng.integers(author.n + 1))
    states = _kernels.sample_chain(cum, rng.random(n_tokens), start)
    vocab = np.array(list(author.words) + [""], dtype=object)
    tokens = vocab[states]
    filler = states == author.n
    tokens[filler] = filler_words()[rng.integers(FILLER_POOL, size=int(filler.sum()))]
    return tokens


def split_speeches(tokens: np.ndarray, rng: np.random.Generator, mean: int = MEAN_SPEECH,
                   speakers: Sequence[str] = ("Speaker",)) -> list[Speech]:
    out = []
    k = 0
    while k < len(tokens):
        length = int(rng.geometric(1.0 / mean))
        out.append(Speech(speakers[len(out) % len(speakers)], tuple(tokens[k:k + length].tolist())))
        k += length
    return out


def make_play(plan: Sequence[SyntheticAuthor], tokens_per_act: int, rng: np.random.Generator,
              title: str = "play", scenes_per_act: int = 3, author_label=None,
              speakers: Sequence[str] = ("Speaker",)) -> PlayDocument:
    """One act per entry of ``plan``, each written entirely by that author."""
    acts = []
    for a_no, author in enumerate(plan, 1):
        tokens = sample_tokens(author, tokens_per_act, rng)
        bounds = np.linspace(0, tokens_per_act, scenes_per_act + 1).astype(int)
        scenes = tuple(
            Scene(s_no, tuple(split_speeches(tokens[bounds[s_no - 1]:bounds[s_no]], rng, speakers=speakers)))
            for s_no in range(1, scenes_per_act + 1)
        )
        acts.append(Act(a_no, scenes))
    return PlayDocument(title, tuple(acts), author_label)


def make_canons(authors: Sequence[SyntheticAuthor], n_plays: int, n_tokens: int, seed: int = 0,
                acts: int = 5, scenes_per_act: int = 3) -> dict[str, list[PlayDocument]]:
    """``n_plays`` single-author plays of ``n_tokens`` tokens per author."""
    rng = np.random.default_rng([seed, 1])
    per_act = max(1, n_tokens // acts)
    return {
        a.name: [make_play([a] * acts, per_act, rng, title=f"{a.name}-{k + 1:02d}",
                           scenes_per_act=scenes_per_act, author_label=a.name)
                 for k in range(n_plays)]
        for a in authors
    }


def synthetic_manifest(n_authors: int = 6, n_plays: int = 12, n_tokens: int = 20_000, seed: int = 7,
                       words: Sequence[str] | None = None, names: Sequence[str] | None = None, **kwargs):
    from .corpus import default_lexicon
    from .experiments import CorpusManifest

    words = tuple(words) if words is not None else default_lexicon().words
    authors = make_authors(n_authors, words, seed=seed, names=names, **kwargs)
    return CorpusManifest(make_canons(authors, n_plays, n_tokens, seed)), authors


BENCH_METHODS = ("wan", "pca-4", "pca-16", "delta-manhattan", "delta-euclidean", "delta-cosine")
BENCH_LABELS = {
    "wan": "WAN",
    "pca-4": "PCA (4 pc's)",
    "pca-16": "PCA (16 pc's)",
    "delta-manhattan": "Delta (Manhattan)",
    "delta-euclidean": "Delta (Euclidean)",
    "delta-cosine": "Delta (Cosine)",
}


def synth_bench(params, n_authors: int = 6, n_plays: int = 12, n_tokens: int = 20_000, seed: int = 7,
                methods: Sequence[str] = BENCH_METHODS, **generator):
    """Leave-one-out accuracy of every method on a fresh synthetic corpus.

    Returns ``(accuracies, results, authors, seconds)``.  A PCA method with
    more components than the training data supports scores ``nan``.
    """
    from .experiments import _LooEngine

    t0 = time.perf_counter()
    manifest, authors = synthetic_manifest(n_authors, n_plays, n_tokens, seed, words=params.words,
                                          **generator)
    engine = _LooEngine(manifest.canons(), params)
    results, acc = {}, {}
    for m in methods:
        try:
            results[m] = engine.run(m)
        except RankDeficient as exc:
            # too few training texts for this many components
            log.warning("%s skipped: %s", m, exc)
            results[m] = None
            acc[m] = math.nan
            continue
        acc[m] = results[m].accuracy
    return acc, results, authors, time.perf_counter() - t0
