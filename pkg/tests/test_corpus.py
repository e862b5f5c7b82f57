import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fwan.corpus import (
    FunctionWordLexicon,
    frequency_vector,
    load_lexicon,
    parse_lexicon,
    parse_play,
    read_play,
    serialize_play,
    tokenize,
)
from fwan.errors import DuplicateLexiconEntry, InvalidParameter, MalformedMarkup

from oracles import count_words


# -- tokenize ----------------------------------------------------------------

@pytest.mark.parametrize("raw, expected", [
    ("The King, and I.", ["the", "king", "and", "i"]),
    ("'Tis well -- 'tis well", ["'tis", "well", "'tis", "well"]),
    ("", []),
    ("   \n\t ", []),
    ("well-met, o'er the hill!", ["well-met", "o'er", "the", "hill"]),
    ("(1599) 42", ["1599", "42"]),
    ("father's house", ["father's", "house"]),
])
def test_tokenize_examples(raw, expected):
    assert tokenize(raw) == expected


def test_leading_apostrophe_keeps_is_distinct():
    assert "is" not in tokenize("'Tis so, 'tis")


_text = st.text(alphabet=st.characters(codec="utf-8", categories=("L", "N", "P", "Zs", "Cc")), max_size=200)


@given(_text)
def test_tokenize_idempotent(raw):
    toks = tokenize(raw)
    assert tokenize(" ".join(toks)) == toks
    for t in toks:
        assert t and not any(c.isspace() for c in t)
        assert t == t.lower()


# -- markup -------------------------------------------------------------------

@pytest.mark.parametrize("doc", [
    "<ACT 1>\n<SCENE 1>\n<SPEAKER Anne> An apple.",
    "<ACT 1>\n<SCENE 1>\n<SPEAKER Anne>\nAn apple.",
])
def test_parse_single_speech(doc):
    play = parse_play(doc)
    assert len(play.acts) == 1 and len(play.acts[0].scenes) == 1
    (speech,) = play.acts[0].scenes[0].speeches
    assert speech.speaker == "Anne"
    assert speech.tokens == ("an", "apple")


def test_flat_mode():
    play = parse_play("a b\n\nc d\n", mode="flat")
    (act,) = play.acts
    (scene,) = act.scenes
    assert [s.tokens for s in scene.speeches] == [("a", "b"), ("c", "d")]


@pytest.mark.parametrize("doc, lineno", [
    ("<SCENE 1>\ntext", 1),
    ("<ACT 1>\n<SCENE 1>\n<ACT 1>", 3),
    ("<ACT 2>\n<ACT 1>", 2),
    ("<ACT 1>\n<SCENE 1>\n<EXIT all>", 3),
    ("<ACT 1>\ntext before scene", 2),
    ("<ACT one>", 1),
    ("<ACT 1>\n<SCENE 2>\n<SCENE 2>", 3),
    ("<ACT 1> trailing", 1),
    ("<ACT 1>\n<SCENE 1\n", 2),
])
def test_malformed_markup(doc, lineno):
    with pytest.raises(MalformedMarkup) as exc:
        parse_play(doc)
    assert exc.value.lineno == lineno
    assert f"{lineno}:" in str(exc.value)


def test_malformed_markup_reports_path(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("<ACT 1>\n<BOGUS>\n")
    with pytest.raises(MalformedMarkup, match=r"bad\.txt:2:"):
        read_play(f)


def test_speech_spans_lines_and_comments():
    doc = """<TITLE Test>
<AUTHOR Someone>
# a comment
<ACT 1>
<SCENE 1>
<SPEAKER Bo>
one two
three
<SPEAKER Cy>
<SPEAKER Di>
four
<SCENE 2>
five
"""
    play = parse_play(doc)
    assert play.title == "Test" and play.author_label == "Someone"
    s1, s2 = play.acts[0].scenes
    assert [(s.speaker, s.tokens) for s in s1.speeches] == [
        ("Bo", ("one", "two", "three")), ("Cy", ()), ("Di", ("four",))]
    assert [(s.speaker, s.tokens) for s in s2.speeches] == [("", ("five",))]


def test_speaker_names_never_reach_tokens():
    doc = "<ACT 1>\n<SCENE 1>\n<SPEAKER An>\nGood morrow sir\n<SPEAKER The Duke> What news\n"
    play = parse_play(doc)
    toks = play.tokens()
    assert "an" not in toks and "the" not in toks and "duke" not in toks


_token = st.from_regex(r"'?[a-z0-9][a-z0-9'\-]{0,6}[a-z0-9]", fullmatch=True) | st.from_regex(r"[a-z]", fullmatch=True)
_speech = st.tuples(st.from_regex(r"[A-Z][a-z]{0,8}( [A-Z][a-z]{0,5})?", fullmatch=True),
                    st.lists(_token, max_size=12))


@st.composite
def _plays(draw):
    acts = []
    for a in sorted(draw(st.sets(st.integers(1, 9), min_size=1, max_size=3))):
        scenes = []
        for s in sorted(draw(st.sets(st.integers(1, 9), min_size=1, max_size=3))):
            scenes.append((s, draw(st.lists(_speech, max_size=4))))
        acts.append((a, scenes))
    lines = ["<TITLE T>"]
    for a, scenes in acts:
        lines.append(f"<ACT {a}>")
        for s, speeches in scenes:
            lines.append(f"<SCENE {s}>")
            for spk, toks in speeches:
                lines.append(f"<SPEAKER {spk}>")
                if toks:
                    lines.append(" ".join(toks))
    return "\n".join(lines)


@given(_plays())
@settings(max_examples=60)
def test_markup_round_trip(doc):
    play = parse_play(doc)
    again = parse_play(serialize_play(play))
    assert again == play


@given(_plays())
@settings(max_examples=40)
def test_segmentation_only_groups(doc):
    play = parse_play(doc)
    flat = parse_play("\n".join(" ".join(s.tokens) for s in play.speeches() if s.tokens), mode="flat")
    assert sorted(flat.tokens()) == sorted(play.tokens())


# -- lexicon ------------------------------------------------------------------

def test_shipped_lexicon(lexicon):
    assert len(lexicon) == 100
    assert len(lexicon.act) == 76
    assert len(lexicon.scene) == 55
    assert lexicon.scene <= lexicon.act
    assert lexicon.words[:3] == ("a", "about", "after")
    assert len(lexicon.sublexicon("act")) == 76
    assert len(lexicon.sublexicon("scene")) == 55


def test_lexicon_file_order(tmp_path):
    f = tmp_path / "lex.txt"
    f.write_text("a\nthe\n")
    lex = load_lexicon(f)
    assert lex.words == ("a", "the")


def test_lexicon_duplicate(tmp_path):
    f = tmp_path / "lex.txt"
    f.write_text("a\na\n")
    with pytest.raises(DuplicateLexiconEntry):
        load_lexicon(f)


def test_lexicon_flags_and_comments():
    lex = parse_lexicon("# header\nthe as\nof a  # trailing\nand\n")
    assert lex.words == ("the", "of", "and")
    assert lex.act == {"the", "of"} and lex.scene == {"the"}
    assert parse_lexicon(lex.dumps()) == lex


def test_lexicon_env_override(tmp_path, monkeypatch):
    f = tmp_path / "lex.txt"
    f.write_text("x\ny\n")
    monkeypatch.setenv("FWAN_LEXICON", str(f))
    assert load_lexicon().words == ("x", "y")


def test_lexicon_flag_outside_list():
    with pytest.raises(InvalidParameter):
        FunctionWordLexicon(("a",), frozenset({"b"}))


def test_lexicon_prefix(small_lexicon):
    assert small_lexicon.prefix(2).words == ("a", "the")
    with pytest.raises(InvalidParameter):
        small_lexicon.prefix(0)


# -- frequency vectors ---------------------------------------------------------

def test_frequency_vector_direct():
    lex = FunctionWordLexicon(("a", "the"))
    fv = frequency_vector([["a", "the", "a"]], lex, 2)
    assert fv.counts.tolist() == [2, 1]
    assert fv.total_tokens == 3
    np.testing.assert_allclose(fv.relative, [2 / 3, 1 / 3])


def test_frequency_vector_no_hits():
    fv = frequency_vector([["x", "y"]], FunctionWordLexicon(("a", "the")))
    assert fv.counts.tolist() == [0, 0]
    assert fv.relative.tolist() == [0.0, 0.0]


def test_frequency_vector_zero_n():
    with pytest.raises(InvalidParameter):
        frequency_vector([["a"]], FunctionWordLexicon(("a",)), 0)


def test_frequency_vector_against_counter(rng):
    alphabet = [f"w{k}" for k in range(10)]
    tokens = [alphabet[k] for k in rng.integers(10, size=1000)]
    units = [tokens[k:k + 37] for k in range(0, 1000, 37)]
    lex = FunctionWordLexicon(tuple(alphabet[:6]))
    fv = frequency_vector(units, lex, 6)
    counts, total = count_words(units, lex.words)
    assert fv.counts.tolist() == counts
    assert fv.total_tokens == total == 1000
    assert 0 <= fv.relative.min() and fv.relative.sum() <= 1
