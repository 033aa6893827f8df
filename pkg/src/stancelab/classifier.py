"""Prompted stance labeling of evidence sentences.

The prompt is a fixed template with a single slot for the sentence. Responses
are expected to follow "Reasoning: ... Answer: <label>"; parsing anchors on
the last "Answer:" marker so chatty completions still resolve. Completions go
through an append-only cache keyed by (prompt_hash, model_id), which makes
replay runs a pure function of corpus, cache and config.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Protocol

from .errors import StancelabError
from .evidence_filter import EvidenceSentence
from .segmenter import sentence_id


class Label(str, Enum):
    HELPFUL = "helpful"
    HARMFUL = "harmful"
    NEITHER = "neither"


class EmptySentence(StancelabError):
    pass


class MalformedResponse(StancelabError):
    pass


class BackendError(StancelabError):
    """Transport-level failure: no usable completion was produced."""


class CacheMiss(BackendError):
    pass


class CacheWriteFailure(StancelabError):
    pass


@dataclass(frozen=True)
class DecodingParams:
    model_id: str = "gpt-4-0613"
    temperature: float = 0.0
    max_tokens: int = 512

    def __post_init__(self):
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        if not (self.temperature >= 0.0 and self.temperature == self.temperature):
            raise ValueError("temperature must be finite and >= 0")
        if self.max_tokens < 16:
            raise ValueError("max_tokens must be at least 16")


@dataclass(frozen=True)
class ClassificationRecord:
    sentence_id: str
    model_id: str
    prompt_hash: str
    raw_response: str
    reasoning: str
    label: Label | None
    failure: str | None
    attempts: int
    timestamp: datetime

    def __post_init__(self):
        if (self.label is None) == (self.failure is None):
            raise ValueError("record must carry exactly one of label or failure")
        if self.attempts < 1:
            raise ValueError("attempts must be positive")

    @property
    def labeled(self) -> bool:
        return self.label is not None


SLOT = "[INPUT SENTENCE]"
SENTENCE_MARKER = "This is the sentence: --> "

_template_cache: str | None = None


def prompt_template() -> str:
    """Return the shipped prompt template, slot included."""
    global _template_cache
    if _template_cache is None:
        _template_cache = (
            resources.files("stancelab").joinpath("assets/prompt_template.txt").read_text("utf-8")
        )
    return _template_cache


def render_prompt(sentence_text: str) -> str:
    """Substitute the sentence into the template slot, verbatim."""
    if not sentence_text.strip():
        raise EmptySentence("cannot render a prompt for an empty sentence")
    return prompt_template().replace(SLOT, sentence_text, 1)


def prompt_hash(model_id: str, prompt: str) -> str:
    digest = hashlib.sha256()
    digest.update(model_id.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(prompt.encode("utf-8"))
    return digest.hexdigest()


_LABEL_TOKENS = {label.value: label for label in Label}
_STRIP_CHARS = "\"'.,;:!?()[]{}<>*_`~-‘’“”"


def parse_response(raw_response: str) -> tuple[str, Label]:
    """Extract (reasoning, label) from a completion.

    The label is the first token after the last case-insensitive "Answer:"
    that resolves to a known label once surrounding punctuation is stripped.
    Reasoning is whatever sits between the last "Reasoning:" before that
    marker and the marker itself.
    """
    lowered = raw_response.lower()
    answer_at = lowered.rfind("answer:")
    if answer_at < 0:
        raise MalformedResponse("no Answer: marker")
    label = None
    for token in raw_response[answer_at + len("answer:") :].split():
        core = token.strip(_STRIP_CHARS).lower()
        if core in _LABEL_TOKENS:
            label = _LABEL_TOKENS[core]
            break
    if label is None:
        raise MalformedResponse("no valid label token after Answer:")
    reasoning_at = lowered.rfind("reasoning:", 0, answer_at)
    if reasoning_at < 0:
        reasoning = ""
    else:
        reasoning = raw_response[reasoning_at + len("reasoning:") : answer_at].strip()
    return reasoning, label


class Backend(Protocol):
    # Base delay in seconds for exponential backoff between retries; None
    # disables sleeping (deterministic local backends).
    retry_backoff_base: float | None

    def complete(self, prompt: str, params: DecodingParams) -> str: ...


class CompletionCache:
    """Append-only JSONL store of raw completions keyed by (prompt_hash, model_id)."""

    def __init__(self, path):
        self.path = Path(path)
        self._entries: dict[tuple[str, str], str] = {}
        if self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    row = json.loads(line)
                    self._entries[(row["prompt_hash"], row["model_id"])] = row["raw_response"]

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, prompt_hash: str, model_id: str) -> str | None:
        return self._entries.get((prompt_hash, model_id))

    def put(self, prompt_hash: str, model_id: str, raw_response: str) -> None:
        key = (prompt_hash, model_id)
        if self._entries.get(key) == raw_response:
            return
        row = {
            "prompt_hash": prompt_hash,
            "model_id": model_id,
            "raw_response": raw_response,
            "created_at": datetime.now(timezone.utc).isoformat(),
        }
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
                fh.flush()
        except OSError as exc:
            raise CacheWriteFailure(f"cannot persist completion: {exc}") from exc
        self._entries[key] = raw_response


class ScriptedBackend:
    """Deterministic backend answering from a sentence_text -> response_text map."""

    retry_backoff_base = None

    def __init__(self, responses: dict[str, str]):
        self._responses = dict(responses)

    @classmethod
    def from_jsonl(cls, path) -> "ScriptedBackend":
        responses: dict[str, str] = {}
        with Path(path).open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                row = json.loads(line)
                if "sentence_text" not in row or "response_text" not in row:
                    raise BackendError(
                        f"{path}:{lineno}: fixture rows need sentence_text and response_text"
                    )
                responses[row["sentence_text"]] = row["response_text"]
        return cls(responses)

    def complete(self, prompt: str, params: DecodingParams) -> str:
        if SENTENCE_MARKER not in prompt:
            raise BackendError("prompt does not carry a sentence marker")
        sentence = prompt.split(SENTENCE_MARKER, 1)[1]
        response = self._responses.get(sentence)
        if response is None:
            raise BackendError(f"no scripted response for sentence: {sentence[:60]!r}")
        return response


class ReplayBackend:
    """Cache-only backend; anything absent from the cache is a hard miss."""

    retry_backoff_base = None

    def __init__(self, cache: CompletionCache):
        self._cache = cache

    def complete(self, prompt: str, params: DecodingParams) -> str:
        cached = self._cache.get(prompt_hash(params.model_id, prompt), params.model_id)
        if cached is None:
            raise CacheMiss("cache miss")
        return cached


class LiveBackend:
    """OpenAI-style chat-completions HTTP backend.

    The endpoint and key come from STANCELAB_API_BASE and STANCELAB_API_KEY;
    neither is ever written to disk.
    """

    retry_backoff_base = 1.0

    def __init__(self, base_url: str | None = None, api_key: str | None = None, timeout: float = 60.0):
        self.base_url = (base_url or os.environ.get("STANCELAB_API_BASE", "")).rstrip("/")
        self.api_key = api_key or os.environ.get("STANCELAB_API_KEY", "")
        self.timeout = timeout
        if not self.base_url:
            raise BackendError("live backend requires STANCELAB_API_BASE")

    def complete(self, prompt: str, params: DecodingParams) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": params.model_id,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            response = requests.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise BackendError(f"transport failure: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(f"backend returned HTTP {response.status_code}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"unexpected response shape: {exc}") from exc


def _now() -> datetime:
    return datetime.now(timezone.utc)


def _classify_prompt(
    sid: str,
    prompt: str,
    phash: str,
    backend: Backend,
    params: DecodingParams,
    retry_limit: int,
) -> ClassificationRecord:
    if retry_limit < 0:
        raise ValueError("retry_limit must be >= 0")
    raw = ""
    failure = "no attempt made"
    for attempt in range(1, retry_limit + 2):
        if attempt > 1 and getattr(backend, "retry_backoff_base", None):
            time.sleep(backend.retry_backoff_base * 2 ** (attempt - 2))
        try:
            raw = backend.complete(prompt, params)
        except BackendError as exc:
            failure = str(exc) or exc.__class__.__name__
            continue
        try:
            reasoning, label = parse_response(raw)
        except MalformedResponse as exc:
            failure = str(exc)
            continue
        return ClassificationRecord(
            sentence_id=sid,
            model_id=params.model_id,
            prompt_hash=phash,
            raw_response=raw,
            reasoning=reasoning,
            label=label,
            failure=None,
            attempts=attempt,
            timestamp=_now(),
        )
    return ClassificationRecord(
        sentence_id=sid,
        model_id=params.model_id,
        prompt_hash=phash,
        raw_response=raw,
        reasoning="",
        label=None,
        failure=failure,
        attempts=retry_limit + 1,
        timestamp=_now(),
    )


def _record_from_cached(sid: str, phash: str, params: DecodingParams, raw: str) -> ClassificationRecord:
    try:
        reasoning, label = parse_response(raw)
        return ClassificationRecord(
            sentence_id=sid,
            model_id=params.model_id,
            prompt_hash=phash,
            raw_response=raw,
            reasoning=reasoning,
            label=label,
            failure=None,
            attempts=1,
            timestamp=_now(),
        )
    except MalformedResponse as exc:
        return ClassificationRecord(
            sentence_id=sid,
            model_id=params.model_id,
            prompt_hash=phash,
            raw_response=raw,
            reasoning="",
            label=None,
            failure=str(exc),
            attempts=1,
            timestamp=_now(),
        )


def classify_sentence(
    sentence: EvidenceSentence,
    backend: Backend,
    params: DecodingParams,
    retry_limit: int = 3,
) -> ClassificationRecord:
    """Label a single evidence sentence; failures become FAILED records, not raises."""
    prompt = render_prompt(sentence.sentence.text)
    return _classify_prompt(
        sentence_id(sentence.sentence),
        prompt,
        prompt_hash(params.model_id, prompt),
        backend,
        params,
        retry_limit,
    )


def classify_corpus(
    sentences,
    backend: Backend,
    params: DecodingParams,
    cache: CompletionCache,
    concurrency_limit: int = 4,
    retry_limit: int = 3,
) -> list[ClassificationRecord]:
    """Label every sentence, cache-first, preserving input order.

    Fresh completions are persisted before their record is emitted; a cache
    write failure aborts the whole run rather than risk losing completions.
    """
    if concurrency_limit < 1:
        raise ValueError("concurrency_limit must be >= 1")
    records: list[ClassificationRecord | None] = [None] * len(sentences)
    pending = []
    for pos, ev in enumerate(sentences):
        prompt = render_prompt(ev.sentence.text)
        phash = prompt_hash(params.model_id, prompt)
        cached = cache.get(phash, params.model_id)
        if cached is None:
            pending.append((pos, sentence_id(ev.sentence), prompt, phash))
        else:
            records[pos] = _record_from_cached(sentence_id(ev.sentence), phash, params, cached)

    write_lock = threading.Lock()

    def run(item):
        pos, sid, prompt, phash = item
        record = _classify_prompt(sid, prompt, phash, backend, params, retry_limit)
        if record.raw_response:
            with write_lock:
                cache.put(phash, params.model_id, record.raw_response)
        return pos, record

    if pending:
        with ThreadPoolExecutor(max_workers=min(concurrency_limit, len(pending))) as pool:
            for pos, record in pool.map(run, pending):
                records[pos] = record
    return records  # type: ignore[return-value]


def record_to_json(record: ClassificationRecord, include_timestamp: bool = False) -> dict:
    row = {
        "sentence_id": record.sentence_id,
        "model_id": record.model_id,
        "prompt_hash": record.prompt_hash,
        "raw_response": record.raw_response,
        "reasoning": record.reasoning,
        "outcome": "labeled" if record.labeled else "failed",
        "label": record.label.value if record.label else None,
        "failure": record.failure,
        "attempts": record.attempts,
    }
    if include_timestamp:
        row["timestamp"] = record.timestamp.isoformat()
    return row


def record_from_json(row: dict) -> ClassificationRecord:
    timestamp = row.get("timestamp")
    return ClassificationRecord(
        sentence_id=row["sentence_id"],
        model_id=row["model_id"],
        prompt_hash=row["prompt_hash"],
        raw_response=row["raw_response"],
        reasoning=row["reasoning"],
        label=Label(row["label"]) if row.get("label") else None,
        failure=row.get("failure"),
        attempts=row["attempts"],
        timestamp=datetime.fromisoformat(timestamp) if timestamp else _now(),
    )
