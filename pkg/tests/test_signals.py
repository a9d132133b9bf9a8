import pytest

from clozeclass.corpus import Document
from clozeclass.errors import ValidationError
from clozeclass.signals import (
    DEFAULT_TEMPLATE_SUFFIX,
    SOURCE_DOC,
    SOURCE_MLM,
    PromptTemplate,
    acquire_mlm_signals,
    build_prompt,
    extract_doc_signals,
    is_noun_tag,
    normalize_prediction,
    read_signal_sets,
    write_signal_sets,
)

ARECIBO = (
    "The radio telescope at arecibo observatory will begin mapping the "
    "known galaxy on friday, scientists said."
)


def test_prompt_appends_template_after_terminal_period():
    assert build_prompt(ARECIBO) == ARECIBO + " " + DEFAULT_TEMPLATE_SUFFIX


def test_prompt_inserts_missing_period():
    assert (
        build_prompt("Markets rallied")
        == "Markets rallied. " + DEFAULT_TEMPLATE_SUFFIX
    )


@pytest.mark.parametrize("ending", ["!", "?", "."])
def test_prompt_keeps_existing_sentence_end(ending):
    out = build_prompt(f"Big win{ending}")
    assert out.startswith(f"Big win{ending} This article")


def test_prompt_rejects_empty_text():
    with pytest.raises(ValidationError):
        build_prompt("   ")


def test_prompt_contains_exactly_one_mask():
    assert build_prompt("x").count("[MASK]") == 1


def test_template_requires_single_mask():
    with pytest.raises(ValidationError):
        PromptTemplate(suffix="no mask here.")
    with pytest.raises(ValidationError):
        PromptTemplate(suffix="[MASK] and [MASK].")


@pytest.mark.parametrize(
    "token,expected",
    [
        ("tennis", "tennis"),
        ("Tennis", "tennis"),
        ("##nis", None),
        (".", None),
        ("12", None),
        ("a", None),
        (" sports ", "sports"),
        ("u2", "u2"),
    ],
)
def test_normalize_prediction_uncased(token, expected):
    assert normalize_prediction(token) == expected


def test_normalize_prediction_cased_keeps_case():
    assert normalize_prediction("Tennis", cased=True) == "Tennis"


class StubMaskFill:
    cased = False

    def __init__(self, raw):
        self.raw = raw

    def predictions(self, doc):
        return list(self.raw)


def test_mlm_signals_cap_order_and_dedup():
    raw = [
        ("tennis", 0.5),
        ("Tennis", 0.4),  # duplicate after lowercasing
        ("##her", 0.35),
        ("thailand", 0.3),
        ("federer", 0.2),
        ("seeds", 0.1),
        ("wimbledon", 0.05),
    ]
    out = acquire_mlm_signals(Document(id="d1", text="x"), StubMaskFill(raw), k=5)
    assert out.source == SOURCE_MLM
    assert out.word_list() == ["tennis", "thailand", "federer", "seeds", "wimbledon"]
    scores = [s for _, s in out.words]
    assert scores == sorted(scores, reverse=True)


def test_mlm_signals_k1_bound():
    out = acquire_mlm_signals(
        Document(id="d", text="x"), StubMaskFill([("alpha", 0.9), ("beta", 0.8)]), k=1
    )
    assert len(out) == 1


def test_mlm_signals_unsorted_client_input_resorted():
    raw = [("low", 0.1), ("high", 0.9), ("mid", 0.5)]
    out = acquire_mlm_signals(Document(id="d", text="x"), StubMaskFill(raw), k=3)
    assert out.word_list() == ["high", "mid", "low"]


def test_mlm_signals_all_junk_yields_empty_set():
    out = acquire_mlm_signals(
        Document(id="d", text="x"), StubMaskFill([(".", 0.9), ("##s", 0.8)]), k=5
    )
    assert out.words == ()


def test_mlm_signals_invalid_k():
    with pytest.raises(ValidationError):
        acquire_mlm_signals(Document(id="d", text="x"), StubMaskFill([]), k=0)


def test_noun_tags():
    assert is_noun_tag("NOUN")
    assert is_noun_tag("PROPN")
    assert is_noun_tag("NN")
    assert is_noun_tag("NNS")
    assert is_noun_tag("NNP")
    assert not is_noun_tag("VB")
    assert not is_noun_tag("ADJ")


def test_doc_signals_nouns_dedup_order():
    doc = Document(
        id="d3",
        text="unused",
        tokens=(
            ("Scientists", "NNS"),
            ("discover", "VBP"),
            ("a", "DT"),
            ("genetic", "JJ"),
            ("indicator", "NN"),
            ("of", "IN"),
            ("suicides", "NNS"),
            ("scientists", "NNS"),
        ),
    )
    out = extract_doc_signals(doc)
    assert out.source == SOURCE_DOC
    assert out.word_list() == ["scientists", "indicator", "suicides"]
    assert all(score is None for _, score in out.words)


def test_doc_signals_no_nouns_is_empty():
    doc = Document(id="d", text="x", tokens=(("runs", "VBZ"),))
    assert extract_doc_signals(doc).words == ()


def test_doc_signals_require_tokens():
    with pytest.raises(ValidationError, match="pos"):
        extract_doc_signals(Document(id="d", text="x"))


def test_signal_file_round_trip(tmp_path):
    sets = [
        acquire_mlm_signals(
            Document(id="a", text="x"),
            StubMaskFill([("tennis", 0.5), ("open", 0.25)]),
            k=5,
        ),
        extract_doc_signals(
            Document(id="b", text="y", tokens=(("games", "NNS"),))
        ),
    ]
    path = tmp_path / "signals.jsonl"
    write_signal_sets(sets, path)
    assert read_signal_sets(path) == sets
