"""Dual-annotator labeling sessions and inter-annotator agreement.

Sessions persist as an append-only JSONL event log, one line per recorded
label; current state is the fold of the log with last-write-wins per sentence.
Cohen's kappa is computed from integer counts so that symmetry and label
permutation invariance hold exactly, not merely up to float rounding.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from .classifier import Label
from .errors import StancelabError
from .segmenter import sentence_id

LABEL_ORDER = (Label.HELPFUL, Label.HARMFUL, Label.NEITHER)


class SampleTooLarge(StancelabError):
    pass


class UnknownSentence(StancelabError):
    pass


class ItemSetMismatch(StancelabError):
    pass


class IncompleteSession(StancelabError):
    pass


class DegenerateMarginals(StancelabError):
    pass


class IncompleteAdjudication(StancelabError):
    pass


@dataclass(frozen=True)
class AnnotationSession:
    session_id: str
    annotator_id: str
    items: tuple[str, ...]
    labels: Mapping[str, Label]
    updated_at: datetime

    def __post_init__(self):
        if len(set(self.items)) != len(self.items):
            raise ValueError(f"session {self.session_id}: duplicate items")
        extras = set(self.labels) - set(self.items)
        if extras:
            raise ValueError(f"session {self.session_id}: labels outside item set: {sorted(extras)[:3]}")
        object.__setattr__(self, "labels", MappingProxyType(dict(self.labels)))

    @property
    def complete(self) -> bool:
        return len(self.labels) == len(self.items)


def new_session(session_id: str, annotator_id: str, items) -> AnnotationSession:
    return AnnotationSession(
        session_id=session_id,
        annotator_id=annotator_id,
        items=tuple(items),
        labels={},
        updated_at=datetime.now(timezone.utc),
    )


@dataclass(frozen=True)
class AgreementResult:
    kappa: float
    p_o: float
    p_e: float
    n_items: int
    cross_table: tuple[tuple[int, int, int], ...]  # rows: first session, cols: second


def sample_for_annotation(sentences, n: int, seed: int) -> list[str]:
    """Draw n sentence ids uniformly without replacement, deterministically."""
    ids = [sentence_id(ev.sentence) for ev in sentences]
    if n < 1:
        raise ValueError("sample size must be positive")
    if n > len(ids):
        raise SampleTooLarge(f"requested {n} of {len(ids)} sentences")
    return random.Random(seed).sample(ids, n)


def record_label(
    session: AnnotationSession,
    sid: str,
    label: Label,
    at: datetime | None = None,
) -> AnnotationSession:
    """Return the session with one label recorded; re-labeling overwrites."""
    if sid not in set(session.items):
        raise UnknownSentence(f"{sid} is not part of session {session.session_id}")
    labels = dict(session.labels)
    labels[sid] = label
    return replace(session, labels=labels, updated_at=at or datetime.now(timezone.utc))


def cohen_kappa(a: AnnotationSession, b: AnnotationSession) -> AgreementResult:
    """Cohen's kappa over two fully labeled sessions on the same item set."""
    if set(a.items) != set(b.items):
        raise ItemSetMismatch(f"sessions {a.session_id} and {b.session_id} label different items")
    if not a.items:
        raise IncompleteSession("sessions contain no items")
    for session in (a, b):
        if not session.complete:
            missing = len(session.items) - len(session.labels)
            raise IncompleteSession(f"session {session.session_id} is missing {missing} labels")

    n = len(a.items)
    index = {label: i for i, label in enumerate(LABEL_ORDER)}
    table = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    for sid in a.items:
        table[index[a.labels[sid]]][index[b.labels[sid]]] += 1

    agree = sum(table[i][i] for i in range(3))
    a_counts = [sum(table[i][j] for j in range(3)) for i in range(3)]
    b_counts = [sum(table[i][j] for i in range(3)) for j in range(3)]
    # Integer chance-agreement mass: p_e = expected / n^2.
    expected = sum(a_counts[i] * b_counts[i] for i in range(3))

    if expected == n * n:
        if agree == n:
            kappa = 1.0
        else:
            raise DegenerateMarginals("chance agreement is 1 but observed agreement is not")
    else:
        kappa = (agree * n - expected) / (n * n - expected)
    return AgreementResult(
        kappa=kappa,
        p_o=agree / n,
        p_e=expected / (n * n),
        n_items=n,
        cross_table=tuple(tuple(row) for row in table),
    )


def merge_gold(
    a: AnnotationSession,
    b: AnnotationSession,
    adjudication: AnnotationSession | None = None,
) -> dict[str, Label]:
    """Gold labels: agreed items directly, disagreements from the adjudication session."""
    if set(a.items) != set(b.items):
        raise ItemSetMismatch(f"sessions {a.session_id} and {b.session_id} label different items")
    for session in (a, b):
        if not session.complete:
            raise IncompleteSession(f"session {session.session_id} is not fully labeled")
    gold: dict[str, Label] = {}
    unresolved = []
    for sid in a.items:
        if a.labels[sid] is b.labels[sid]:
            gold[sid] = a.labels[sid]
        elif adjudication is not None and sid in adjudication.labels:
            gold[sid] = adjudication.labels[sid]
        else:
            unresolved.append(sid)
    if unresolved:
        raise IncompleteAdjudication(f"{len(unresolved)} disagreements lack an adjudicated label")
    return gold


def append_label_event(path, session: AnnotationSession, sid: str, label: Label, at: datetime | None = None) -> None:
    """Append one label event; the log is the only durable session state."""
    row = {
        "session_id": session.session_id,
        "annotator_id": session.annotator_id,
        "sentence_id": sid,
        "label": label.value,
        "at": (at or datetime.now(timezone.utc)).isoformat(),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        fh.flush()


def load_label_events(path) -> list[dict]:
    events = []
    path = Path(path)
    if not path.exists():
        return events
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                events.append(json.loads(line))
    return events


def fold_events(sessions: dict[str, AnnotationSession], events) -> dict[str, AnnotationSession]:
    """Replay an event log onto base sessions; unknown session ids are ignored."""
    folded = dict(sessions)
    for event in events:
        session = folded.get(event["session_id"])
        if session is None:
            continue
        folded[event["session_id"]] = record_label(
            session,
            event["sentence_id"],
            Label(event["label"]),
            at=datetime.fromisoformat(event["at"]),
        )
    return folded
