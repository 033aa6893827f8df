import json

import pytest
from hypothesis import given, strategies as st

from stancelab.corpus import (
    CorpusKind,
    canonicalize,
    extract_witness_text,
    load_manifest,
    parse_transcript_turns,
    Document,
)
from stancelab.evidence_filter import (
    CaseMode,
    DEFAULT_ENDS_LEXICON,
    DEFAULT_EVIDENCE_LEXICON,
    EvidenceSentence,
    Lexicon,
    LexiconEntry,
    LexiconFormatError,
    find_matches,
    is_evidence,
    load_lexicon,
)
from stancelab.segmenter import Sentence, segment


def sent(text: str) -> Sentence:
    return Sentence(doc_id="d", index=0, text=text, start=0, end=len(text))


class TestMatching:
    def test_device_and_evidence_terms_together(self):
        ev = is_evidence(sent("The survey covered e-cigarettes in detail."))
        assert ev is not None
        assert [m.phrase for m in ev.ends_matches] == ["e-cigarettes"]
        assert [m.phrase for m in ev.evidence_matches] == ["survey"]

    def test_device_term_alone_is_not_evidence(self):
        assert is_evidence(sent("Vaping was mentioned in passing.")) is None

    def test_evidence_term_alone_is_not_evidence(self):
        assert is_evidence(sent("The study covered unrelated topics.")) is None

    def test_lowercase_ends_is_not_the_acronym(self):
        assert is_evidence(sent("Research continues to the ends of the earth.")) is None

    def test_uppercase_acronym_matches(self):
        assert is_evidence(sent("Research on ENDS is expanding.")) is not None

    def test_exact_mode_is_case_sensitive_both_ways(self):
        assert find_matches("EC devices", DEFAULT_ENDS_LEXICON)
        assert not find_matches("ec devices", DEFAULT_ENDS_LEXICON)

    def test_folded_mode_ignores_case(self):
        assert find_matches("VAPING rates", DEFAULT_ENDS_LEXICON)
        assert find_matches("Vaping rates", DEFAULT_ENDS_LEXICON)

    def test_word_boundaries_reject_embedded_phrases(self):
        assert not find_matches("ecigarette", DEFAULT_ENDS_LEXICON)
        assert not find_matches("Researchers met.", DEFAULT_EVIDENCE_LEXICON)
        assert not find_matches("The datalog grew.", DEFAULT_EVIDENCE_LEXICON)

    def test_punctuation_is_a_boundary(self):
        assert find_matches("(e-cigarettes)", DEFAULT_ENDS_LEXICON)
        assert find_matches("data, though,", DEFAULT_EVIDENCE_LEXICON)

    def test_matches_sorted_and_overlapping_reported(self):
        lexicon = Lexicon(
            "custom",
            (LexiconEntry("heated tobacco", CaseMode.FOLD), LexiconEntry("tobacco", CaseMode.FOLD)),
        )
        matches = find_matches("Heated tobacco remains.", lexicon)
        assert [(m.phrase, m.start) for m in matches] == [
            ("heated tobacco", 0),
            ("tobacco", 7),
        ]

    def test_match_spans_index_the_sentence(self):
        text = "New data on vapers arrived."
        ev = is_evidence(sent(text))
        assert ev is not None
        m = ev.ends_matches[0]
        assert text[m.start : m.end].lower() == m.phrase


class TestEvidenceSentenceModel:
    def test_requires_both_match_lists(self):
        s = sent("The survey covered e-cigarettes.")
        ev = is_evidence(s)
        assert ev is not None
        with pytest.raises(ValueError):
            EvidenceSentence(sentence=s, ends_matches=(), evidence_matches=ev.evidence_matches)
        with pytest.raises(ValueError):
            EvidenceSentence(sentence=s, ends_matches=ev.ends_matches, evidence_matches=())


class TestLexiconLoading:
    def test_plain_and_exact_lines(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("vape pen\nHnB\texact\n\n")
        lexicon = load_lexicon(path)
        assert lexicon.name == "lex"
        assert [(e.phrase, e.case_mode) for e in lexicon.entries] == [
            ("vape pen", CaseMode.FOLD),
            ("HnB", CaseMode.EXACT),
        ]

    def test_rejects_bad_mode(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("vape\tloose\n")
        with pytest.raises(LexiconFormatError):
            load_lexicon(path)

    def test_rejects_empty_file(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("\n\n")
        with pytest.raises(LexiconFormatError):
            load_lexicon(path)


_filler = st.text(alphabet=st.sampled_from(list("xyz ")), max_size=20)


class TestProperties:
    @given(
        _filler,
        st.sampled_from(["e-cigarettes", "vaping", "ENDS", "e cig"]),
        _filler,
        st.sampled_from(["evidence", "study", "data", "surveys"]),
        _filler,
    )
    def test_adding_lexicon_entries_never_drops_a_sentence(self, a, device, b, term, c):
        text = f"Q {a} {device} {b} {term} {c} q".strip()
        s = sent(" ".join(text.split()))
        assert is_evidence(s) is not None
        bigger_ends = Lexicon(
            "ends+", DEFAULT_ENDS_LEXICON.entries + (LexiconEntry("zzqq", CaseMode.FOLD),)
        )
        bigger_evidence = Lexicon(
            "evidence+",
            DEFAULT_EVIDENCE_LEXICON.entries + (LexiconEntry("qqzz", CaseMode.FOLD),),
        )
        assert is_evidence(s, bigger_ends, bigger_evidence) is not None

    @given(st.text(alphabet=st.sampled_from(list("abc eE-cigaretsvpndu.")), max_size=60))
    def test_is_evidence_consistent_with_find_matches(self, raw):
        raw = raw.strip()
        if not raw:
            return
        s = sent(raw)
        ev = is_evidence(s)
        has_both = bool(find_matches(raw, DEFAULT_ENDS_LEXICON)) and bool(
            find_matches(raw, DEFAULT_EVIDENCE_LEXICON)
        )
        assert (ev is not None) == has_both


class TestFixtureCorpus:
    def test_filter_retains_exactly_the_expected_ids(self, fixtures_dir, evidence_expected):
        corpus_dir = fixtures_dir / "corpus"
        expected_ids = [row["sentence_id"] for row in evidence_expected["evidence"]]
        got_ids: list[str] = []
        texts: dict[str, str] = {}
        for meta in load_manifest(corpus_dir / "manifest.csv"):
            raw = (corpus_dir / meta.source_path).read_text("utf-8")
            if meta.corpus_kind is CorpusKind.INQUIRY_TRANSCRIPT:
                raw = extract_witness_text(parse_transcript_turns(raw))
            document = Document(meta=meta, text=canonicalize(raw))
            for s in segment(document):
                if is_evidence(s) is not None:
                    sid = f"{meta.id}#{s.index}"
                    got_ids.append(sid)
                    texts[sid] = s.text
        assert got_ids == expected_ids
        for row in evidence_expected["evidence"]:
            assert texts[row["sentence_id"]] == row["text"]

    def test_seeded_example_sentences_are_retained(self, evidence_expected):
        anchors = evidence_expected["anchors"]
        assert set(anchors) == {"helpful", "harmful", "neither"}
        for info in anchors.values():
            assert is_evidence(sent(info["text"])) is not None
