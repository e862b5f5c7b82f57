"""Word adjacency networks and their Markov-chain normalization."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .corpus import FunctionWordLexicon
from .errors import InvalidParameter, MismatchedParams, NonConvergence

DEFAULT_ALPHA = 0.75
DEFAULT_WINDOW = 10

DAMPING = 1e-6
POWER_TOL = 1e-12
POWER_MAX_ITER = 100_000

FORMAT_HEADER = "fwan-wan 1"


@dataclass(frozen=True)
class WanParams:
    lexicon: FunctionWordLexicon
    alpha: float = DEFAULT_ALPHA
    window: int = DEFAULT_WINDOW
    n_words: int | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameter(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.window) != self.window or self.window < 1:
            raise InvalidParameter(f"window must be a positive integer, got {self.window}")
        if self.n_words is None:
            object.__setattr__(self, "n_words", len(self.lexicon))
        if not 1 <= self.n_words <= len(self.lexicon):
            raise InvalidParameter(f"n_words must be in 1..{len(self.lexicon)}, got {self.n_words}")

    @property
    def words(self) -> tuple[str, ...]:
        return self.lexicon.words[: self.n_words]

    def key(self):
        """What must agree for two networks to be comparable."""
        return (float(self.alpha), int(self.window), self.words)

    def with_words(self, n: int) -> "WanParams":
        return WanParams(self.lexicon, self.alpha, self.window, n)

    def with_lexicon(self, lexicon: FunctionWordLexicon) -> "WanParams":
        return WanParams(lexicon, self.alpha, self.window, len(lexicon))


@dataclass(frozen=True, eq=False)
class Wan:
    """Unnormalized network: ``q[i, j]`` is the discounted count of word j
    following word i within ``window`` positions of the same unit."""

    params: WanParams
    q: np.ndarray
    token_count: int = 0

    def __post_init__(self):
        q = np.array(self.q, dtype=np.float64)
        n = self.params.n_words
        if q.shape != (n, n):
            raise InvalidParameter(f"q must be {n}x{n}, got {q.shape}")
        if not np.all(np.isfinite(q)) or (q < 0).any():
            raise InvalidParameter("q entries must be finite and non-negative")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def words(self):
        return self.params.words

    def __eq__(self, other):
        if not isinstance(other, Wan):
            return NotImplemented
        return (
            self.params.key() == other.params.key()
            and self.token_count == other.token_count
            and np.array_equal(self.q, other.q)
        )

    __hash__ = None


def encode_units(units: Iterable[Sequence[str]], words: Sequence[str]):
    """Flatten token units into (ids, offsets) for the accumulation kernel."""
    index = {w: k for k, w in enumerate(words)}
    ids = []
    offsets = [0]
    for unit in units:
        ids.extend(index.get(t, -1) for t in unit)
        offsets.append(len(ids))
    return np.asarray(ids, dtype=np.int64), np.asarray(offsets, dtype=np.int64)


def build_wan(units: Iterable[Sequence[str]], params: WanParams) -> Wan:
    """Network of one text given as a list of token units (e.g. speeches).

    Windows never cross unit boundaries; tokens outside the lexicon still
    occupy positions.
    """
    ids, offsets = encode_units(units, params.words)
    q = _kernels.wan_accumulate(ids, offsets, params.n_words, params.alpha, params.window)
    return Wan(params, q, int(ids.size))


def aggregate(wans: Sequence[Wan]) -> Wan:
    wans = list(wans)
    if not wans:
        raise InvalidParameter("cannot aggregate an empty list of networks")
    key = wans[0].params.key()
    for w in wans[1:]:
        if w.params.key() != key:
            raise MismatchedParams("networks built with different parameters cannot be aggregated")
    if len(wans) == 1:
        return wans[0]
    q = np.sum([w.q for w in wans], axis=0)
    return Wan(wans[0].params, q, sum(w.token_count for w in wans))


def restrict(wan: Wan, n: int) -> Wan:
    """Network over the first ``n`` words.

    Distances count every token, so this is exactly the leading block.
    """
    if n <= 0 or n > wan.params.n_words:
        raise InvalidParameter(f"n must be in 1..{wan.params.n_words}, got {n}")
    if n == wan.params.n_words:
        return wan
    return Wan(wan.params.with_words(n), wan.q[:n, :n], wan.token_count)


def subnetwork(wan: Wan, name: str) -> Wan:
    """Network over a flagged sub-lexicon ("act", "scene" or "full")."""
    if name == "full":
        return wan
    lex = wan.params.lexicon
    idx = lex.positions(name)
    if idx and idx[-1] >= wan.params.n_words:
        raise InvalidParameter(f"sub-lexicon {name!r} reaches past the {wan.params.n_words} words in use")
    sub = lex.sublexicon(name)
    return Wan(wan.params.with_lexicon(sub), wan.q[np.ix_(idx, idx)], wan.token_count)


# ---------------------------------------------------------------------------
# Markov chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MarkovChain:
    p: np.ndarray
    pi: np.ndarray
    uniform_rows: frozenset[int] = frozenset()
    words: tuple[str, ...] = field(default=())

    @classmethod
    def from_matrix(cls, p, words=()) -> "MarkovChain":
        p = np.array(p, dtype=np.float64)
        p.setflags(write=False)
        pi = limiting_distribution(p)
        pi.setflags(write=False)
        return cls(p, pi, frozenset(), tuple(words))

    @property
    def n(self):
        return self.p.shape[0]


def normalize(wan: Wan) -> MarkovChain:
    """Row-normalize a network; all-zero rows become uniform."""
    q = wan.q
    n = q.shape[0]
    sums = q.sum(axis=1)
    zero = sums == 0
    p = np.empty_like(q)
    p[~zero] = q[~zero] / sums[~zero, None]
    p[zero] = 1.0 / n
    p.setflags(write=False)
    pi = limiting_distribution(p)
    pi.setflags(write=False)
    return MarkovChain(p, pi, frozenset(np.flatnonzero(zero).tolist()), wan.words)


def limiting_distribution(p, damping: float = DAMPING, tol: float = POWER_TOL,
                          max_iter: int = POWER_MAX_ITER) -> np.ndarray:
    """Stationary distribution of ``(1 - damping) p + damping / n``.

    Power iteration from the uniform vector.  Slowly mixing chains (nearly
    decomposable ones, where the damping alone has to force ergodicity) may
    exhaust ``max_iter``; the damped chain is then irreducible and its fixed
    point is obtained by a direct solve instead.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] == 0:
        raise InvalidParameter(f"expected a non-empty square matrix, got shape {p.shape}")
    n = p.shape[0]
    pi, _, converged = _kernels.damped_power_iteration(p, damping, tol, max_iter)
    if converged:
        return pi
    damped = (1.0 - damping) * p + damping / n
    a = damped.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"power iteration did not converge in {max_iter} steps") from exc
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    if np.abs(pi @ damped - pi).sum() > 1e-8:
        raise NonConvergence(f"power iteration did not converge in {max_iter} steps")
    return pi


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def dumps_wan(wan: Wan) -> str:
    buf = io.StringIO()
    buf.write(FORMAT_HEADER + "\n")
    buf.write(f"alpha {wan.params.alpha!r}\n")
    buf.write(f"window {wan.params.window}\n")
    buf.write(f"n_words {wan.params.n_words}\n")
    buf.write(f"token_count {wan.token_count}\n")
    lex = wan.params.lexicon
    for w in wan.words:
        flags = ("a" if w in lex.act else "") + ("s" if w in lex.scene else "")
        buf.write(f"word {w} {flags}".rstrip() + "\n")
    buf.write("q\n")
    for row in wan.q:
        buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()


def loads_wan(text: str, source: str = "<wan>") -> Wan:
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise InvalidParameter(f"{source}:1: not a network file (expected {FORMAT_HEADER!r})")
    meta = {}
    words, act, scene = [], set(), set()
    k = 1
    while k < len(lines) and lines[k].strip() != "q":
        parts = lines[k].split()
        if parts and parts[0] == "word":
            words.append(parts[1])
            flags = parts[2] if len(parts) > 2 else ""
            if "a" in flags:
                act.add(parts[1])
            if "s" in flags:
                scene.add(parts[1])
        elif len(parts) == 2:
            meta[parts[0]] = parts[1]
        elif parts:
            raise InvalidParameter(f"{source}:{k + 1}: cannot parse {lines[k]!r}")
        k += 1
    try:
        n = int(meta["n_words"])
        rows = [[float(v) for v in line.split()] for line in lines[k + 1: k + 1 + n]]
        q = np.array(rows, dtype=np.float64).reshape(n, n)
        lexicon = FunctionWordLexicon(tuple(words), frozenset(act), frozenset(scene))
        params = WanParams(lexicon, float(meta["alpha"]), int(meta["window"]), n)
        return Wan(params, q, int(meta.get("token_count", 0)))
    except (KeyError, ValueError) as exc:
        raise InvalidParameter(f"{source}: malformed network file: {exc}") from exc


def save_wan(wan: Wan, path) -> None:
    Path(path).write_text(dumps_wan(wan), encoding="utf-8")


def load_wan(path) -> Wan:
    path = Path(path)
    return loads_wan(path.read_text(encoding="utf-8"), source=str(path))
