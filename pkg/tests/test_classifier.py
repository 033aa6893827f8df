import hashlib
import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from stancelab import classifier
from stancelab.classifier import (
    BackendError,
    CacheMiss,
    CacheWriteFailure,
    ClassificationRecord,
    CompletionCache,
    DecodingParams,
    EmptySentence,
    Label,
    LiveBackend,
    MalformedResponse,
    ReplayBackend,
    ScriptedBackend,
    SENTENCE_MARKER,
    SLOT,
    classify_corpus,
    classify_sentence,
    parse_response,
    prompt_hash,
    prompt_template,
    record_from_json,
    record_to_json,
    render_prompt,
)
from stancelab.evidence_filter import is_evidence
from stancelab.segmenter import Sentence

PARAMS = DecodingParams()


def evidence(text: str, doc_id: str = "d", index: int = 0):
    ev = is_evidence(Sentence(doc_id=doc_id, index=index, text=text, start=0, end=len(text)))
    assert ev is not None, f"test sentence must pass the filter: {text!r}"
    return ev


EV = evidence("Fresh evidence shows vaping aiding cessation.")


class TestPrompt:
    def test_template_has_one_slot_and_the_marker(self):
        template = prompt_template()
        assert template.count(SLOT) == 1
        assert SENTENCE_MARKER in template

    def test_render_substitutes_verbatim(self):
        prompt = render_prompt("A sentence with [brackets] & symbols.")
        assert "A sentence with [brackets] & symbols." in prompt
        assert SLOT not in prompt

    def test_render_rejects_blank_sentences(self):
        for blank in ("", "   ", "\n\t"):
            with pytest.raises(EmptySentence):
                render_prompt(blank)

    def test_golden_prompt_bytes(self, fixtures_dir, evidence_expected):
        sentence = evidence_expected["anchors"]["helpful"]["text"]
        golden = (fixtures_dir / "golden_prompt.txt").read_bytes()
        assert render_prompt(sentence).encode("utf-8") == golden

    def test_prompt_hash_is_sha256_over_model_and_prompt(self):
        digest = hashlib.sha256("m\x00p".encode("utf-8")).hexdigest()
        assert prompt_hash("m", "p") == digest
        assert prompt_hash("m2", "p") != digest


class TestParseResponse:
    def test_reasoning_and_label(self):
        reasoning, label = parse_response("Reasoning: solid trial data. Answer: helpful")
        assert reasoning == "solid trial data."
        assert label is Label.HELPFUL

    def test_missing_reasoning_section_yields_empty_reasoning(self):
        reasoning, label = parse_response("Answer: neither")
        assert reasoning == ""
        assert label is Label.NEITHER

    def test_last_answer_marker_wins(self):
        _, label = parse_response("Answer: helpful\nSecond thoughts. Answer: harmful")
        assert label is Label.HARMFUL

    def test_last_reasoning_before_marker_wins(self):
        reasoning, _ = parse_response("Reasoning: old. Reasoning: new. Answer: helpful")
        assert reasoning == "new."

    def test_adversarial_fixture(self, adversarial_rows):
        assert len(adversarial_rows) == 50
        for row in adversarial_rows:
            if row["expected_label"] is None:
                with pytest.raises(MalformedResponse):
                    parse_response(row["response_text"])
            else:
                _, label = parse_response(row["response_text"])
                assert label.value == row["expected_label"], row["note"]

    @given(
        st.text(
            alphabet=st.sampled_from(list("abc xyz,.!")), max_size=40
        ).map(str.strip).filter(lambda r: "answer:" not in r and "reasoning:" not in r),
        st.sampled_from(list(Label)),
        st.sampled_from(["Reasoning: {r} Answer: {l}", "REASONING: {r}\nANSWER: {l}"]),
    )
    def test_round_trip(self, reasoning, label, shape):
        raw = shape.format(r=reasoning, l=label.value)
        parsed_reasoning, parsed_label = parse_response(raw)
        assert parsed_label is label
        assert parsed_reasoning == reasoning


class TestCache:
    def test_round_trip_and_persistence(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        cache = CompletionCache(path)
        assert cache.get("h1", "m") is None
        cache.put("h1", "m", "resp")
        assert cache.get("h1", "m") == "resp"
        assert CompletionCache(path).get("h1", "m") == "resp"

    def test_rows_have_sorted_keys_and_created_at(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        CompletionCache(path).put("h1", "m", "resp")
        row = json.loads(path.read_text().splitlines()[0])
        assert list(row) == ["created_at", "model_id", "prompt_hash", "raw_response"]
        datetime.fromisoformat(row["created_at"])

    def test_identical_put_is_deduplicated(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        cache = CompletionCache(path)
        cache.put("h1", "m", "resp")
        cache.put("h1", "m", "resp")
        assert len(path.read_text().splitlines()) == 1

    def test_new_response_for_a_key_appends_and_wins(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        cache = CompletionCache(path)
        cache.put("h1", "m", "old")
        cache.put("h1", "m", "new")
        assert cache.get("h1", "m") == "new"
        assert CompletionCache(path).get("h1", "m") == "new"
        assert len(path.read_text().splitlines()) == 2

    def test_unwritable_path_raises(self, tmp_path):
        target = tmp_path / "cache.jsonl"
        target.mkdir()  # appending to a directory fails on every platform
        cache = CompletionCache.__new__(CompletionCache)
        cache.path = target
        cache._entries = {}
        with pytest.raises(CacheWriteFailure):
            cache.put("h", "m", "r")


class TestBackends:
    def test_scripted_answers_by_sentence(self):
        backend = ScriptedBackend({EV.sentence.text: "Answer: helpful"})
        assert backend.complete(render_prompt(EV.sentence.text), PARAMS) == "Answer: helpful"

    def test_scripted_unknown_sentence_is_an_error(self):
        backend = ScriptedBackend({})
        with pytest.raises(BackendError):
            backend.complete(render_prompt("Unknown sentence here."), PARAMS)

    def test_scripted_requires_the_marker(self):
        backend = ScriptedBackend({"x": "y"})
        with pytest.raises(BackendError):
            backend.complete("prompt without the marker", PARAMS)

    def test_scripted_from_jsonl(self, tmp_path):
        path = tmp_path / "responses.jsonl"
        path.write_text(
            json.dumps({"sentence_text": "S one.", "response_text": "Answer: neither"}) + "\n\n"
        )
        backend = ScriptedBackend.from_jsonl(path)
        assert backend.complete(render_prompt("S one."), PARAMS) == "Answer: neither"

    def test_scripted_from_jsonl_rejects_missing_keys(self, tmp_path):
        path = tmp_path / "responses.jsonl"
        path.write_text(json.dumps({"sentence": "S", "response": "A"}) + "\n")
        with pytest.raises(BackendError, match="sentence_text"):
            ScriptedBackend.from_jsonl(path)

    def test_replay_hits_and_misses(self, tmp_path):
        cache = CompletionCache(tmp_path / "cache.jsonl")
        prompt = render_prompt(EV.sentence.text)
        cache.put(prompt_hash(PARAMS.model_id, prompt), PARAMS.model_id, "Answer: harmful")
        backend = ReplayBackend(cache)
        assert backend.complete(prompt, PARAMS) == "Answer: harmful"
        with pytest.raises(CacheMiss):
            backend.complete(render_prompt("Never seen before."), PARAMS)


class TestLiveBackend:
    def test_requires_base_url(self, monkeypatch):
        monkeypatch.delenv("STANCELAB_API_BASE", raising=False)
        with pytest.raises(BackendError):
            LiveBackend()

    def test_posts_chat_completion(self, monkeypatch):
        monkeypatch.setenv("STANCELAB_API_BASE", "https://api.example.test/v1/")
        monkeypatch.setenv("STANCELAB_API_KEY", "sk-test")
        seen = {}

        class FakeResponse:
            status_code = 200

            @staticmethod
            def json():
                return {"choices": [{"message": {"content": "Answer: helpful"}}]}

        def fake_post(url, json=None, headers=None, timeout=None):
            seen.update(url=url, json=json, headers=headers, timeout=timeout)
            return FakeResponse()

        import requests

        monkeypatch.setattr(requests, "post", fake_post)
        backend = LiveBackend()
        assert backend.complete("the prompt", PARAMS) == "Answer: helpful"
        assert seen["url"] == "https://api.example.test/v1/chat/completions"
        assert seen["headers"]["Authorization"] == "Bearer sk-test"
        assert seen["json"]["model"] == PARAMS.model_id
        assert seen["json"]["messages"] == [{"role": "user", "content": "the prompt"}]

    def test_non_200_is_a_backend_error(self, monkeypatch):
        monkeypatch.setenv("STANCELAB_API_BASE", "https://api.example.test")
        import requests

        class FakeResponse:
            status_code = 500

        monkeypatch.setattr(requests, "post", lambda *a, **k: FakeResponse())
        with pytest.raises(BackendError):
            LiveBackend().complete("p", PARAMS)


class _FlakyBackend:
    """Returns garbage until the configured attempt, then a clean response."""

    def __init__(self, succeed_on: int, response: str = "Answer: helpful", backoff=None):
        self.succeed_on = succeed_on
        self.response = response
        self.retry_backoff_base = backoff
        self.calls = 0

    def complete(self, prompt, params):
        self.calls += 1
        if self.calls < self.succeed_on:
            return "no marker at all"
        return self.response


class TestClassifySentence:
    def test_happy_path(self):
        backend = ScriptedBackend({EV.sentence.text: "Reasoning: ok. Answer: helpful"})
        record = classify_sentence(EV, backend, PARAMS)
        assert record.labeled
        assert record.label is Label.HELPFUL
        assert record.reasoning == "ok."
        assert record.attempts == 1
        assert record.sentence_id == "d#0"
        assert record.prompt_hash == prompt_hash(
            PARAMS.model_id, render_prompt(EV.sentence.text)
        )

    def test_retries_then_succeeds(self):
        backend = _FlakyBackend(succeed_on=3)
        record = classify_sentence(EV, backend, PARAMS, retry_limit=3)
        assert record.labeled and record.attempts == 3

    def test_exhausted_retries_yield_a_failed_record(self):
        backend = _FlakyBackend(succeed_on=99)
        record = classify_sentence(EV, backend, PARAMS, retry_limit=2)
        assert not record.labeled
        assert record.attempts == 3
        assert record.failure == "no Answer: marker"
        assert record.label is None

    def test_zero_retry_limit_means_one_attempt(self):
        backend = _FlakyBackend(succeed_on=99)
        record = classify_sentence(EV, backend, PARAMS, retry_limit=0)
        assert record.attempts == 1

    def test_backend_errors_are_failures_not_raises(self):
        record = classify_sentence(EV, ScriptedBackend({}), PARAMS, retry_limit=1)
        assert not record.labeled
        assert "no scripted response" in record.failure

    def test_backoff_doubles_between_attempts(self, monkeypatch):
        sleeps = []
        monkeypatch.setattr(classifier.time, "sleep", sleeps.append)
        backend = _FlakyBackend(succeed_on=99, backoff=0.25)
        classify_sentence(EV, backend, PARAMS, retry_limit=3)
        assert sleeps == [0.25, 0.5, 1.0]

    def test_no_backoff_configured_means_no_sleeping(self, monkeypatch):
        monkeypatch.setattr(
            classifier.time, "sleep", lambda *_: pytest.fail("slept with backoff disabled")
        )
        classify_sentence(EV, _FlakyBackend(succeed_on=99), PARAMS, retry_limit=3)


SENTENCES = [
    evidence(f"Fresh evidence item {i} shows vaping trends.", index=i) for i in range(8)
]
RESPONSES = {ev.sentence.text: f"Reasoning: r{i}. Answer: neither" for i, ev in enumerate(SENTENCES)}


class TestClassifyCorpus:
    def test_preserves_input_order(self, tmp_path):
        cache = CompletionCache(tmp_path / "cache.jsonl")
        records = classify_corpus(SENTENCES, ScriptedBackend(RESPONSES), PARAMS, cache)
        assert [r.sentence_id for r in records] == [f"d#{i}" for i in range(8)]
        assert all(r.labeled for r in records)

    def test_cache_first_never_calls_the_backend(self, tmp_path):
        cache = CompletionCache(tmp_path / "cache.jsonl")
        classify_corpus(SENTENCES, ScriptedBackend(RESPONSES), PARAMS, cache)

        class Exploding:
            retry_backoff_base = None

            def complete(self, prompt, params):
                raise AssertionError("backend must not be called on a warm cache")

        replayed = classify_corpus(SENTENCES, Exploding(), PARAMS, cache)
        assert [r.label for r in replayed] == [Label.NEITHER] * 8
        assert all(r.attempts == 1 for r in replayed)

    def test_cached_and_fresh_records_agree(self, tmp_path):
        cache = CompletionCache(tmp_path / "cache.jsonl")
        fresh = classify_corpus(SENTENCES, ScriptedBackend(RESPONSES), PARAMS, cache)
        cached = classify_corpus(SENTENCES, ScriptedBackend(RESPONSES), PARAMS, cache)
        assert [record_to_json(r) for r in fresh] == [record_to_json(r) for r in cached]

    def test_failed_attempts_with_empty_response_are_not_cached(self, tmp_path):
        cache = CompletionCache(tmp_path / "cache.jsonl")
        records = classify_corpus([EV], ScriptedBackend({}), PARAMS, cache, retry_limit=0)
        assert not records[0].labeled
        assert len(cache) == 0

    def test_malformed_responses_are_cached_for_inspection(self, tmp_path):
        cache = CompletionCache(tmp_path / "cache.jsonl")
        backend = ScriptedBackend({EV.sentence.text: "garbled"})
        records = classify_corpus([EV], backend, PARAMS, cache, retry_limit=0)
        assert not records[0].labeled
        assert len(cache) == 1

    def test_concurrent_run_matches_serial_run(self, tmp_path):
        serial = classify_corpus(
            SENTENCES,
            ScriptedBackend(RESPONSES),
            PARAMS,
            CompletionCache(tmp_path / "c1.jsonl"),
            concurrency_limit=1,
        )
        concurrent = classify_corpus(
            SENTENCES,
            ScriptedBackend(RESPONSES),
            PARAMS,
            CompletionCache(tmp_path / "c2.jsonl"),
            concurrency_limit=8,
        )
        assert [record_to_json(r) for r in serial] == [record_to_json(r) for r in concurrent]

    def test_cache_write_failure_aborts_the_run(self, tmp_path):
        bad = CompletionCache.__new__(CompletionCache)
        bad.path = tmp_path  # a directory: appends will fail
        bad._entries = {}
        with pytest.raises(CacheWriteFailure):
            classify_corpus([EV], ScriptedBackend({EV.sentence.text: "Answer: helpful"}), PARAMS, bad)

    def test_thread_safe_cache_writes(self, tmp_path):
        cache = CompletionCache(tmp_path / "cache.jsonl")
        many = [
            evidence(f"Survey {i} tracked e-cigs closely.", index=i) for i in range(32)
        ]
        responses = {ev.sentence.text: "Answer: helpful" for ev in many}
        records = classify_corpus(many, ScriptedBackend(responses), PARAMS, cache, concurrency_limit=16)
        assert all(r.labeled for r in records)
        lines = (tmp_path / "cache.jsonl").read_text().splitlines()
        assert len(lines) == 32
        for line in lines:
            json.loads(line)


class TestRecordSerialization:
    def test_round_trip_without_timestamp(self):
        record = classify_sentence(
            EV, ScriptedBackend({EV.sentence.text: "Reasoning: r. Answer: harmful"}), PARAMS
        )
        row = record_to_json(record)
        assert "timestamp" not in row
        assert row["outcome"] == "labeled"
        revived = record_from_json(row)
        assert record_to_json(revived) == row

    def test_round_trip_with_timestamp(self):
        record = classify_sentence(
            EV, ScriptedBackend({EV.sentence.text: "Answer: neither"}), PARAMS
        )
        row = record_to_json(record, include_timestamp=True)
        assert record_from_json(row).timestamp == record.timestamp

    def test_failed_record_serializes_outcome(self):
        record = classify_sentence(EV, ScriptedBackend({}), PARAMS, retry_limit=0)
        row = record_to_json(record)
        assert row["outcome"] == "failed"
        assert row["label"] is None
        assert row["failure"]


class TestValidation:
    def test_record_needs_exactly_one_of_label_or_failure(self):
        base = dict(
            sentence_id="s",
            model_id="m",
            prompt_hash="h",
            raw_response="r",
            reasoning="",
            attempts=1,
            timestamp=datetime.now(timezone.utc),
        )
        with pytest.raises(ValueError):
            ClassificationRecord(label=None, failure=None, **base)
        with pytest.raises(ValueError):
            ClassificationRecord(label=Label.HELPFUL, failure="also failed", **base)

    def test_record_needs_positive_attempts(self):
        with pytest.raises(ValueError):
            ClassificationRecord(
                sentence_id="s",
                model_id="m",
                prompt_hash="h",
                raw_response="r",
                reasoning="",
                label=Label.HELPFUL,
                failure=None,
                attempts=0,
                timestamp=datetime.now(timezone.utc),
            )

    def test_decoding_params_bounds(self):
        with pytest.raises(ValueError):
            DecodingParams(model_id="")
        with pytest.raises(ValueError):
            DecodingParams(temperature=-0.1)
        with pytest.raises(ValueError):
            DecodingParams(max_tokens=8)

    def test_default_decoding_params(self):
        assert PARAMS.model_id == "gpt-4-0613"
        assert PARAMS.temperature == 0.0
