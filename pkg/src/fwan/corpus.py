"""Play texts, tokenization, function-word lexicons and frequency vectors.

Markup format (UTF-8, one directive per line)::

    <TITLE The Tempest>        optional header
    <AUTHOR Shakespeare>       optional header
    <ACT 1>
    <SCENE 1>
    <SPEAKER Prospero>
    speech text, possibly over
    several lines
    <SPEAKER Miranda> text may also follow the directive
    ...

Lines starting with ``#`` are comments.  Speaker names never reach the token
stream.  In flat mode every non-empty line is one speech of a single implicit
act/scene.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateLexiconEntry, InvalidParameter, MalformedMarkup

LEXICON_ENV = "FWAN_LEXICON"

_LEADING = re.compile(r"^[^\w']+")
_TRAILING = re.compile(r"[^\w]+$")
_DIRECTIVE = re.compile(r"^<\s*([A-Za-z]+)(?:\s+([^>]*?))?\s*>\s*(.*)$")


def tokenize(raw_text: str) -> list[str]:
    """Lowercase, split on whitespace and strip surrounding punctuation.

    Word-internal apostrophes and hyphens survive, as do leading apostrophes
    (so "'tis" stays distinct from "is").  Trailing punctuation, including
    apostrophes, is removed.
    """
    tokens = []
    for piece in raw_text.lower().split():
        piece = _LEADING.sub("", piece)
        piece = _TRAILING.sub("", piece)
        if piece:
            tokens.append(piece)
    return tokens


# ---------------------------------------------------------------------------
# lexicon
# ---------------------------------------------------------------------------

SUBLEXICONS = ("full", "act", "scene")


@dataclass(frozen=True)
class FunctionWordLexicon:
    """Ordered function words, most common first, with act/scene flags."""

    words: tuple[str, ...]
    act: frozenset[str] = frozenset()
    scene: frozenset[str] = frozenset()

    def __post_init__(self):
        seen = set()
        for w in self.words:
            if w in seen:
                raise DuplicateLexiconEntry(f"duplicate lexicon entry: {w!r}")
            seen.add(w)
        stray = (self.act | self.scene) - seen
        if stray:
            raise InvalidParameter(f"flagged words missing from lexicon: {sorted(stray)}")

    def __len__(self):
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def index(self) -> dict[str, int]:
        return {w: k for k, w in enumerate(self.words)}

    def prefix(self, n: int) -> "FunctionWordLexicon":
        if n <= 0 or n > len(self.words):
            raise InvalidParameter(f"prefix size must be in 1..{len(self.words)}, got {n}")
        words = self.words[:n]
        keep = frozenset(words)
        return FunctionWordLexicon(words, self.act & keep, self.scene & keep)

    def positions(self, name: str) -> list[int]:
        """Indices (in order) of the words belonging to a named sub-lexicon."""
        if name == "full":
            return list(range(len(self.words)))
        flags = self._flags(name)
        return [k for k, w in enumerate(self.words) if w in flags]

    def sublexicon(self, name: str) -> "FunctionWordLexicon":
        if name == "full":
            return self
        flags = self._flags(name)
        words = tuple(w for w in self.words if w in flags)
        if not words:
            raise InvalidParameter(f"sub-lexicon {name!r} is empty")
        keep = frozenset(words)
        return FunctionWordLexicon(words, self.act & keep, self.scene & keep)

    def _flags(self, name):
        if name == "act":
            return self.act
        if name == "scene":
            return self.scene
        raise InvalidParameter(f"unknown sub-lexicon {name!r}; expected one of {SUBLEXICONS}")

    def dumps(self) -> str:
        lines = []
        for w in self.words:
            flags = ("a" if w in self.act else "") + ("s" if w in self.scene else "")
            lines.append(f"{w} {flags}".rstrip())
        return "\n".join(lines) + "\n"


def parse_lexicon(text: str, source=None) -> FunctionWordLexicon:
    words, act, scene = [], set(), set()
    seen = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) > 2 or (len(parts) == 2 and not set(parts[1]) <= {"a", "s"}):
            raise InvalidParameter(f"{source or '<lexicon>'}:{lineno}: bad lexicon line {line!r}")
        word = parts[0].lower()
        if word in seen:
            raise DuplicateLexiconEntry(
                f"{source or '<lexicon>'}:{lineno}: {word!r} already listed on line {seen[word]}"
            )
        seen[word] = lineno
        words.append(word)
        if len(parts) == 2:
            if "a" in parts[1]:
                act.add(word)
            if "s" in parts[1]:
                scene.add(word)
    return FunctionWordLexicon(tuple(words), frozenset(act), frozenset(scene))


def load_lexicon(path=None) -> FunctionWordLexicon:
    """Read a lexicon file; ``None`` means ``$FWAN_LEXICON`` or the shipped default."""
    if path is None:
        path = os.environ.get(LEXICON_ENV) or None
    if path is None:
        return default_lexicon()
    path = Path(path)
    return parse_lexicon(path.read_text(encoding="utf-8"), source=str(path))


def default_lexicon() -> FunctionWordLexicon:
    text = resources.files("fwan").joinpath("data/function_words.txt").read_text("utf-8")
    return parse_lexicon(text, source="function_words.txt")


# ---------------------------------------------------------------------------
# plays
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Speech:
    speaker: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class Scene:
    number: int
    speeches: tuple[Speech, ...]

    def units(self):
        return [s.tokens for s in self.speeches]

    def n_tokens(self):
        return sum(len(s.tokens) for s in self.speeches)


@dataclass(frozen=True)
class Act:
    number: int
    scenes: tuple[Scene, ...]

    def units(self):
        return [s.tokens for sc in self.scenes for s in sc.speeches]

    def n_tokens(self):
        return sum(sc.n_tokens() for sc in self.scenes)


@dataclass(frozen=True)
class PlayDocument:
    title: str
    acts: tuple[Act, ...]
    author_label: str | None = None

    def __post_init__(self):
        _check_numbers([a.number for a in self.acts], "act")
        for a in self.acts:
            _check_numbers([s.number for s in a.scenes], f"scene in act {a.number}")

    def speeches(self):
        return [s for a in self.acts for sc in a.scenes for s in sc.speeches]

    def units(self):
        """Token lists of every speech, in order."""
        return [s.tokens for s in self.speeches()]

    def tokens(self):
        return [t for s in self.speeches() for t in s.tokens]

    def n_tokens(self):
        return sum(a.n_tokens() for a in self.acts)

    def scenes(self):
        """(act number, scene) pairs in play order."""
        return [(a.number, sc) for a in self.acts for sc in a.scenes]


def _check_numbers(numbers, what):
    for k, n in enumerate(numbers):
        if n <= 0:
            raise InvalidParameter(f"{what} numbers must be positive, got {n}")
        if k and n <= numbers[k - 1]:
            raise InvalidParameter(f"{what} numbers must be unique and ascending: {numbers}")


def parse_play(document: str, mode: str = "structured", title: str = "", author_label=None,
               path=None) -> PlayDocument:
    if mode == "flat":
        return _parse_flat(document, title, author_label)
    if mode != "structured":
        raise InvalidParameter(f"unknown parse mode {mode!r}")

    acts = []  # list of (number, [ (number, [Speech]) ])
    speaker = None
    buf: list[str] | None = None

    def close_speech():
        nonlocal speaker, buf
        if buf is not None:
            acts[-1][1][-1][1].append(Speech(speaker, tuple(buf)))
        speaker, buf = None, None

    for lineno, raw in enumerate(document.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _DIRECTIVE.match(line)
        if m is None and line.startswith("<"):
            raise MalformedMarkup(f"unterminated directive {line!r}", lineno, path)
        if m is None:
            if not acts or not acts[-1][1]:
                raise MalformedMarkup("speech text outside a scene", lineno, path)
            if buf is None:
                speaker, buf = "", []
            buf.extend(tokenize(line))
            continue
        name, arg, rest = m.group(1).upper(), (m.group(2) or "").strip(), m.group(3)
        if rest and name != "SPEAKER":
            raise MalformedMarkup(f"unexpected text after <{m.group(1)}>", lineno, path)
        if name == "TITLE":
            title = arg
        elif name == "AUTHOR":
            author_label = arg or None
        elif name == "ACT":
            close_speech()
            num = _directive_number(arg, name, lineno, path)
            if acts and num <= acts[-1][0]:
                what = "duplicate" if any(a[0] == num for a in acts) else "out-of-order"
                raise MalformedMarkup(f"{what} act number {num}", lineno, path)
            acts.append((num, []))
        elif name == "SCENE":
            close_speech()
            if not acts:
                raise MalformedMarkup("scene outside any act", lineno, path)
            num = _directive_number(arg, name, lineno, path)
            scenes = acts[-1][1]
            if scenes and num <= scenes[-1][0]:
                what = "duplicate" if any(s[0] == num for s in scenes) else "out-of-order"
                raise MalformedMarkup(f"{what} scene number {num} in act {acts[-1][0]}", lineno, path)
            scenes.append((num, []))
        elif name == "SPEAKER":
            close_speech()
            if not acts or not acts[-1][1]:
                raise MalformedMarkup("speaker outside a scene", lineno, path)
            speaker, buf = arg, tokenize(rest)
        else:
            raise MalformedMarkup(f"unknown directive <{m.group(1)}>", lineno, path)
    if acts and acts[-1][1]:
        close_speech()
    return PlayDocument(
        title=title,
        acts=tuple(Act(a, tuple(Scene(s, tuple(sp)) for s, sp in scenes)) for a, scenes in acts),
        author_label=author_label,
    )


def _directive_number(arg, name, lineno, path):
    try:
        num = int(arg)
    except ValueError:
        raise MalformedMarkup(f"<{name}> needs a positive integer, got {arg!r}", lineno, path) from None
    if num <= 0:
        raise MalformedMarkup(f"<{name}> needs a positive integer, got {num}", lineno, path)
    return num


def _parse_flat(document, title, author_label):
    speeches = []
    for line in document.splitlines():
        if line.strip():
            speeches.append(Speech("", tuple(tokenize(line))))
    return PlayDocument(title, (Act(1, (Scene(1, tuple(speeches)),)),), author_label)


def serialize_play(play: PlayDocument) -> str:
    """Inverse of :func:`parse_play` in structured mode."""
    out = []
    if play.title:
        out.append(f"<TITLE {play.title}>")
    if play.author_label:
        out.append(f"<AUTHOR {play.author_label}>")
    for act in play.acts:
        out.append(f"<ACT {act.number}>")
        for sc in act.scenes:
            out.append(f"<SCENE {sc.number}>")
            for sp in sc.speeches:
                out.append(f"<SPEAKER {sp.speaker}>" if sp.speaker else "<SPEAKER>")
                if sp.tokens:
                    out.append(" ".join(sp.tokens))
    return "\n".join(out) + "\n"


def read_play(path, mode: str = "structured", author_label=None) -> PlayDocument:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_play(text, mode=mode, title=path.stem, author_label=author_label, path=str(path))


# ---------------------------------------------------------------------------
# frequency vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrequencyVector:
    counts: np.ndarray
    total_tokens: int
    words: tuple[str, ...] = field(default=(), compare=False)

    @property
    def lexicon_size(self):
        return self.counts.size

    @property
    def relative(self) -> np.ndarray:
        if self.total_tokens == 0:
            return np.zeros(self.counts.size)
        return self.counts / self.total_tokens

    def __eq__(self, other):
        if not isinstance(other, FrequencyVector):
            return NotImplemented
        return self.total_tokens == other.total_tokens and np.array_equal(self.counts, other.counts)

    __hash__ = None


def frequency_vector(units: Iterable[Sequence[str]], lexicon: FunctionWordLexicon,
                     n: int | None = None) -> FrequencyVector:
    """Counts of the first ``n`` lexicon words over all tokens of ``units``."""
    if n is None:
        n = len(lexicon)
    if n <= 0 or n > len(lexicon):
        raise InvalidParameter(f"n must be in 1..{len(lexicon)}, got {n}")
    index = {w: k for k, w in enumerate(lexicon.words[:n])}
    counts = np.zeros(n, dtype=np.int64)
    total = 0
    for unit in units:
        total += len(unit)
        for tok in unit:
            k = index.get(tok)
            if k is not None:
                counts[k] += 1
    counts.setflags(write=False)
    return FrequencyVector(counts, total, lexicon.words[:n])
