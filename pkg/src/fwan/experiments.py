"""Attribution studies over a corpus of plays."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .baselines import delta_attribute, pca_attribute, pca_fit, zscore_fit
from .corpus import FrequencyVector, PlayDocument, frequency_vector, read_play
from .entropy import AttributionReport, attribute, common_support, rank_scores, relative_entropy
from .errors import InvalidExperiment, InvalidParameter, ManifestError, MissingStructure
from .wan import MarkovChain, Wan, WanParams, aggregate, build_wan, normalize, restrict, subnetwork

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

GRANULARITIES = ("play", "act", "scene")


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DisputedPlay:
    play: PlayDocument
    candidates: tuple[str, ...] = ()
    scene_candidates: tuple[str, ...] = ()
    path: str | None = None


@dataclass
class CorpusManifest:
    """Canons of plays per author, joint canons and disputed plays."""

    authors: dict[str, list[PlayDocument]]
    joint_canons: dict[str, list[PlayDocument]] = field(default_factory=dict)
    disputed: list[DisputedPlay] = field(default_factory=list)
    source: str | None = None

    def __post_init__(self):
        for section in (self.authors, self.joint_canons):
            for name, plays in section.items():
                seen = set()
                for p in plays:
                    key = id(p)
                    if key in seen:
                        raise ManifestError(f"play {p.title!r} appears twice in canon {name!r}")
                    seen.add(key)

    def canons(self, include_joint: bool = False) -> dict[str, list[PlayDocument]]:
        out = dict(self.authors)
        if include_joint:
            out.update(self.joint_canons)
        return out

    def find_play(self, ref: str) -> PlayDocument:
        """Look up a play by title or by the file stem it was read from."""
        pools = [p for ps in self.canons(True).values() for p in ps] + [d.play for d in self.disputed]
        for p in pools:
            if p.title == ref or Path(ref).stem == p.title:
                return p
        raise ManifestError(f"no play {ref!r} in manifest")


def load_manifest(path, mode: str | None = None) -> CorpusManifest:
    """Read a TOML manifest; play paths are relative to the manifest file.

    Schema::

        mode = "structured"                 # or "flat"; optional
        [authors]
        Shakespeare = ["plays/ham.txt", ...]
        [joint_canons]                      # optional
        "Fletcher+Beaumont" = [...]
        [[disputed]]                        # optional, repeatable
        play = "plays/h8.txt"
        candidates = ["Shakespeare", ...]   # default: every solo author
        scene_candidates = ["Shakespeare", "Fletcher"]
    """
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    mode = mode or doc.get("mode", "structured")
    base = path.parent
    cache: dict[Path, PlayDocument] = {}

    def load(ref, label):
        full = (base / ref).resolve()
        if full not in cache:
            if not full.exists():
                raise ManifestError(f"{path}: referenced play {ref!r} not found")
            cache[full] = read_play(full, mode=mode, author_label=label)
        return cache[full]

    def section(name):
        out = {}
        for author, refs in doc.get(name, {}).items():
            if not isinstance(refs, list):
                raise ManifestError(f"{path}: [{name}] {author} must be a list of paths")
            resolved = [(base / r).resolve() for r in refs]
            if len(set(resolved)) != len(resolved):
                raise ManifestError(f"{path}: a play is listed twice in canon {author!r}")
            out[author] = [load(r, author) for r in refs]
        return out

    authors = section("authors")
    joint = section("joint_canons")
    if not authors:
        raise ManifestError(f"{path}: manifest has no [authors] section")
    disputed = []
    for entry in doc.get("disputed", []):
        if "play" not in entry:
            raise ManifestError(f"{path}: [[disputed]] entry without 'play'")
        disputed.append(DisputedPlay(
            load(entry["play"], None),
            tuple(entry.get("candidates", ())),
            tuple(entry.get("scene_candidates", ())),
            entry["play"],
        ))
    return CorpusManifest(authors, joint, disputed, str(path))


# ---------------------------------------------------------------------------
# shared machinery
# ---------------------------------------------------------------------------

class _Networks:
    """Per-play networks and frequency counts, computed once per study."""

    def __init__(self, params: WanParams):
        self.params = params
        self._wan: dict[int, Wan] = {}
        self._freq: dict[int, FrequencyVector] = {}

    def wan(self, play: PlayDocument) -> Wan:
        w = self._wan.get(id(play))
        if w is None:
            w = self._wan[id(play)] = build_wan(play.units(), self.params)
        return w

    def freq(self, play: PlayDocument) -> FrequencyVector:
        f = self._freq.get(id(play))
        if f is None:
            f = self._freq[id(play)] = frequency_vector(play.units(), self.params.lexicon,
                                                        self.params.n_words)
        return f


def _is_same(a: PlayDocument, b: PlayDocument) -> bool:
    return a is b or a == b


def profile_wans(canons: Mapping[str, Sequence[PlayDocument]], params: WanParams,
                 exclude: PlayDocument | None = None, networks: _Networks | None = None) -> dict[str, Wan]:
    """Aggregated network per canon, leaving out ``exclude`` wherever it occurs."""
    networks = networks or _Networks(params)
    out = {}
    for name, plays in canons.items():
        kept = [p for p in plays if exclude is None or not _is_same(p, exclude)]
        if not kept:
            raise InvalidExperiment(f"canon {name!r} is empty once {exclude.title!r} is removed")
        out[name] = aggregate([networks.wan(p) for p in kept])
    return out


def parse_method(method: str):
    """'wan', 'delta-<metric>' or 'pca-<k>' -> (kind, arg)."""
    if method == "wan":
        return "wan", None
    if method == "delta":
        return "delta", "manhattan"
    kind, _, arg = method.partition("-")
    if kind == "delta" and arg in ("manhattan", "euclidean", "cosine"):
        return "delta", arg
    if kind == "pca" and arg.isdigit() and int(arg) > 0:
        return "pca", int(arg)
    raise InvalidParameter(f"unknown method {method!r}; use wan, delta-<metric> or pca-<k>")


# ---------------------------------------------------------------------------
# profile similarity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimilarityMatrix:
    authors: tuple[str, ...]
    values: np.ndarray  # nats; nan on the diagonal

    @property
    def centinats(self):
        return 100.0 * self.values

    def asymmetry_pairs(self):
        """(row, col, H(row, col), H(col, row)) for every unordered pair, in cn."""
        out = []
        n = len(self.authors)
        for r in range(n):
            for c in range(r + 1, n):
                out.append((self.authors[r], self.authors[c],
                            100.0 * self.values[r, c], 100.0 * self.values[c, r]))
        return out

    def get(self, row, col) -> float:
        """Entry in centinats."""
        return 100.0 * self.values[self.authors.index(row), self.authors.index(col)]


def profile_similarity_matrix(manifest: CorpusManifest, params: WanParams,
                              support: str = "common") -> SimilarityMatrix:
    canons = manifest.canons()
    if len(canons) < 2:
        raise InvalidExperiment("the similarity matrix needs at least two authors")
    chains = {a: normalize(w) for a, w in profile_wans(canons, params).items()}
    names = tuple(chains)
    mask = common_support(list(chains.values())) if support == "common" else None
    vals = np.full((len(names), len(names)), np.nan)
    for r, a in enumerate(names):
        for c, b in enumerate(names):
            if r != c:
                vals[r, c] = relative_entropy(chains[a], chains[b], support, mask=mask).nats
    return SimilarityMatrix(names, vals)


# ---------------------------------------------------------------------------
# leave-one-out
# ---------------------------------------------------------------------------

@dataclass
class LooResult:
    method: str
    reports: list[AttributionReport]
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (author, play title)

    @property
    def n_correct(self):
        return sum(bool(r.correct) for r in self.reports)

    @property
    def accuracy(self) -> float:
        return self.n_correct / len(self.reports) if self.reports else math.nan


@dataclass(frozen=True)
class _Unit:
    text_id: str
    author: str
    play: PlayDocument
    units: tuple  # token units


def _units_of(play: PlayDocument, granularity: str):
    if granularity == "play":
        return [(play.title, play.units())]
    if granularity == "act":
        return [(f"{play.title}/{a.number}", a.units()) for a in play.acts]
    if granularity == "scene":
        return [(f"{play.title}/{a}.{sc.number}", sc.units()) for a, sc in play.scenes()]
    raise InvalidParameter(f"unknown granularity {granularity!r}; expected one of {GRANULARITIES}")


class _LooEngine:
    """Leave-one-out over the units of a set of canons at any lexicon prefix.

    Networks and frequency counts are computed once at ``params.n_words``
    words; smaller prefixes are exact leading blocks / leading counts.
    """

    def __init__(self, canons, params, granularity="play"):
        if len(canons) < 2:
            raise InvalidExperiment("leave-one-out needs at least two candidate authors")
        self.canons = canons
        self.params = params
        self.granularity = granularity
        self.networks = _Networks(params)
        self.skipped = []
        self.items: list[_Unit] = []
        self.unit_wan: dict[str, Wan] = {}
        self.unit_freq: dict[str, FrequencyVector] = {}
        for author, plays in canons.items():
            if not plays:
                raise InvalidExperiment(f"author {author!r} has an empty canon")
            for play in plays:
                if len(plays) < 2:
                    log.warning("skipping %r: %s has a single play", play.title, author)
                    self.skipped.append((author, play.title))
                    continue
                for text_id, units in _units_of(play, granularity):
                    self.items.append(_Unit(text_id, author, play, units))

    # per-unit caches, keyed by text id at the full prefix
    def _unit_wan(self, item):
        if self.granularity == "play":
            return self.networks.wan(item.play)
        w = self.unit_wan.get(item.text_id)
        if w is None:
            w = self.unit_wan[item.text_id] = build_wan(item.units, self.params)
        return w

    def _unit_freq(self, item):
        if self.granularity == "play":
            return self.networks.freq(item.play)
        f = self.unit_freq.get(item.text_id)
        if f is None:
            f = self.unit_freq[item.text_id] = frequency_vector(
                item.units, self.params.lexicon, self.params.n_words)
        return f

    def run(self, method: str, n: int | None = None, support: str = "common") -> LooResult:
        n = n or self.params.n_words
        kind, arg = parse_method(method)
        if kind == "wan":
            reports = self._run_wan(n, support)
        else:
            reports = self._run_freq(kind, arg, n)
        return LooResult(method, reports, list(self.skipped))

    def _run_wan(self, n, support):
        full = {}
        for author, plays in self.canons.items():
            full[author] = {id(p): restrict(self.networks.wan(p), n) for p in plays}
        chain_cache: dict[tuple, MarkovChain] = {}

        def profile_chain(author, excluded):
            key = (author, excluded)
            c = chain_cache.get(key)
            if c is None:
                kept = [w for pid, w in full[author].items() if pid != excluded]
                c = chain_cache[key] = normalize(aggregate(kept))
            return c

        def pooled_chain(excluded):
            key = ("<pooled>", excluded)
            c = chain_cache.get(key)
            if c is None:
                kept = [w for a in full for pid, w in full[a].items() if pid != excluded]
                c = chain_cache[key] = normalize(aggregate(kept))
            return c

        reports = []
        for item in self.items:
            pid = id(item.play)
            profiles = {a: profile_chain(a, pid if a == item.author else None) for a in self.canons}
            text_chain = normalize(restrict(self._unit_wan(item), n))
            reports.append(attribute(text_chain, profiles, support, average=pooled_chain(pid),
                                     text_id=item.text_id, true_author=item.author))
        return reports

    def _run_freq(self, kind, arg, n):
        reports = []
        vecs = [(item, _prefix(self._unit_freq(item), n)) for item in self.items]
        # units of singleton canons still serve as known texts
        extra = []
        for author, title in self.skipped:
            play = next(p for p in self.canons[author] if p.title == title)
            for text_id, units in _units_of(play, self.granularity):
                extra.append((_Unit(text_id, author, play, units),
                              _prefix(frequency_vector(units, self.params.lexicon, self.params.n_words), n)))
        pool = vecs + extra
        for item, vec in vecs:
            known: dict[str, list[FrequencyVector]] = {a: [] for a in self.canons}
            for other, ov in pool:
                if other.play is not item.play:
                    known[other.author].append(ov)
            if kind == "delta":
                model = zscore_fit([v for vs in known.values() for v in vs])
                r = delta_attribute(vec, known, arg, model, text_id=item.text_id, true_author=item.author)
            else:
                model = pca_fit([v for vs in known.values() for v in vs], arg)
                r = pca_attribute(vec, known, model, text_id=item.text_id, true_author=item.author)
            reports.append(r)
        return reports


def _prefix(vec: FrequencyVector, n: int) -> FrequencyVector:
    if n == vec.lexicon_size:
        return vec
    return FrequencyVector(vec.counts[:n], vec.total_tokens, vec.words[:n])


def leave_one_out(manifest: CorpusManifest, params: WanParams, method: str = "wan",
                  support: str = "common") -> LooResult:
    """Attribute every canon play with that play removed from all profiles.

    Network reports carry the average-playwright discount, the pooled
    profile also excluding the held-out play.  Plays of single-play canons
    are skipped and listed in ``result.skipped``.
    """
    return _LooEngine(manifest.canons(), params).run(method, support=support)


# ---------------------------------------------------------------------------
# collaborations
# ---------------------------------------------------------------------------

def attribute_collaborative(play: PlayDocument, profiles: Mapping[str, Wan | Sequence[PlayDocument]],
                            params: WanParams, support: str = "common") -> AttributionReport:
    """Attribute a play against solo and joint canons; the full ranking is kept.

    ``profiles`` maps candidate name to either a prebuilt network or a list
    of plays (from which ``play`` is excluded if present).
    """
    if not profiles:
        raise InvalidExperiment("no candidate profiles")
    networks = _Networks(params)
    wans = {}
    for name, prof in profiles.items():
        if isinstance(prof, Wan):
            wans[name] = prof
        else:
            wans[name] = profile_wans({name: prof}, params, exclude=play, networks=networks)[name]
    text = normalize(networks.wan(play))
    if len(wans) == 1:
        (name,) = wans
        h = relative_entropy(text, normalize(wans[name]), support, candidates=[normalize(wans[name])]).nats
        return rank_scores(play.title, {name: h}, true_author=play.author_label)
    chains = {name: normalize(w) for name, w in wans.items()}
    pooled = normalize(aggregate(list(wans.values())))
    return attribute(text, chains, support, average=pooled, text_id=play.title,
                     true_author=play.author_label)


# ---------------------------------------------------------------------------
# intraplay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnitAttribution:
    act: int
    scene: int | None
    n_tokens: int
    report: AttributionReport
    signed_margin_cn: float  # > 0 toward the first focal author


@dataclass(frozen=True)
class IntraplayReport:
    title: str
    focal: tuple[str, str]
    acts: tuple[UnitAttribution, ...]
    scenes: tuple[UnitAttribution, ...]


def _sub(wan: Wan, which) -> Wan:
    if isinstance(which, int):
        return restrict(wan, which)
    return subnetwork(wan, which)


def intraplay(play: PlayDocument, act_candidates: Mapping[str, Sequence[PlayDocument]],
              scene_candidates: Sequence[str], params: WanParams, support: str = "common",
              act_words: str | int = "act", scene_words: str | int = "scene") -> IntraplayReport:
    """Attribute each act among all candidates and each scene between two.

    The whole play is removed from every candidate canon first.  Acts use the
    ``act_words`` sub-lexicon, scenes ``scene_words`` (a flag name or a
    prefix size).  Common support is taken over the candidates of the
    respective level.
    """
    if not play.acts or any(not a.scenes for a in play.acts):
        raise MissingStructure(f"{play.title!r} has no act/scene divisions")
    focal = tuple(scene_candidates)
    if len(focal) != 2:
        raise InvalidParameter(f"exactly two scene candidates are needed, got {len(focal)}")
    missing = [c for c in focal if c not in act_candidates]
    if missing:
        raise InvalidParameter(f"scene candidates {missing} are not act candidates")
    if len(act_candidates) < 2:
        raise InvalidExperiment("act attribution needs at least two candidates")
    networks = _Networks(params)
    full = profile_wans(act_candidates, params, exclude=play, networks=networks)

    def level(names, which):
        wans = {a: _sub(full[a], which) for a in names}
        chains = {a: normalize(w) for a, w in wans.items()}
        return chains, normalize(aggregate(list(wans.values())))

    act_chains, act_pool = level(list(act_candidates), act_words)
    scene_chains, scene_pool = level(focal, scene_words)

    def run(units, which, chains, pool, text_id):
        chain = normalize(_sub(build_wan(units, params), which))
        r = attribute(chain, chains, support, average=pool, text_id=text_id)
        return r, 100.0 * r.signed_margin(*focal)

    acts = []
    for a in play.acts:
        r, m = run(a.units(), act_words, act_chains, act_pool, f"{play.title}/{a.number}")
        acts.append(UnitAttribution(a.number, None, a.n_tokens(), r, m))
    scenes = []
    for a_no, sc in play.scenes():
        r, m = run(sc.units(), scene_words, scene_chains, scene_pool, f"{play.title}/{a_no}.{sc.number}")
        scenes.append(UnitAttribution(a_no, sc.number, sc.n_tokens(), r, m))
    return IntraplayReport(play.title, focal, tuple(acts), tuple(scenes))


# ---------------------------------------------------------------------------
# lexicon-size training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LexiconTraining:
    granularity: str
    method: str
    best_n: int
    best_accuracy: float
    curve: tuple[tuple[int, float], ...]


def train_lexicon_size(manifest: CorpusManifest, params: WanParams, granularity: str = "play",
                       method: str = "wan", sizes: Sequence[int] | None = None,
                       support: str = "common") -> LexiconTraining:
    """Leave-one-out accuracy at each lexicon prefix size; smallest best size wins.

    Act and scene units are attributed among all authors with their whole
    play removed from the profiles.
    """
    if granularity not in GRANULARITIES:
        raise InvalidParameter(f"unknown granularity {granularity!r}; expected one of {GRANULARITIES}")
    top = params.n_words
    if sizes is None:
        sizes = range(min(5, top), top + 1)
    sizes = sorted(set(int(s) for s in sizes))
    if not sizes or sizes[0] < 1 or sizes[-1] > top:
        raise InvalidParameter(f"sizes must lie in 1..{top}")
    engine = _LooEngine(manifest.canons(), params, granularity)
    curve = []
    for n in sizes:
        acc = engine.run(method, n, support).accuracy
        log.info("%s %s n=%d accuracy=%.4f", granularity, method, n, acc)
        curve.append((n, acc))
    best_n, best_acc = max(curve, key=lambda t: (t[1], -t[0]))
    return LexiconTraining(granularity, method, best_n, best_acc, tuple(curve))
