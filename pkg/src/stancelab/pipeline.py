"""Pipeline stages and their JSONL artifacts under work_dir.

Every stage reads the previous stage's artifact and writes its own; re-running
a stage with unchanged inputs produces byte-identical output. Timestamps live
in a sidecar (run_meta.json) so the artifacts themselves stay deterministic.
"""

from __future__ import annotations

import json
import logging
from datetime import datetime, timezone
from pathlib import Path

from . import annotation, classifier, report, stats
from .classifier import (
    ClassificationRecord,
    CompletionCache,
    Label,
    LiveBackend,
    ReplayBackend,
    ScriptedBackend,
)
from .config import PipelineConfig
from .corpus import (
    CorpusKind,
    Country,
    Document,
    DocumentMeta,
    OrgCategory,
    canonicalize,
    extract_witness_text,
    load_manifest,
    parse_transcript_turns,
)
from .errors import StancelabError
from .evidence_filter import (
    EvidenceSentence,
    TermMatch,
    is_evidence,
    load_lexicon,
)
from .segmenter import Sentence, read_abbreviations, segment, sentence_id

log = logging.getLogger("stancelab")

DOCUMENTS = "documents.jsonl"
SENTENCES = "sentences.jsonl"
EVIDENCE = "evidence.jsonl"
RECORDS = "records.jsonl"
SESSIONS = "sessions.jsonl"
CACHE = "cache.jsonl"
AGREEMENT = "agreement.json"
EVALUATION = "evaluation.json"
ANALYSIS = "analysis.json"
BREAKDOWN_CSV = "breakdown.csv"
BREAKDOWN_TXT = "breakdown.txt"
BREAKDOWN_JSON = "breakdown.json"
RUN_META = "run_meta.json"

ADJUDICATION_SESSION = "adjudication"


class MissingArtifact(StancelabError):
    pass


def _artifact(cfg: PipelineConfig, name: str, must_exist: bool = False) -> Path:
    path = cfg.work_dir / name
    if must_exist and not path.is_file():
        raise MissingArtifact(f"{name} not found in {cfg.work_dir}; run the earlier stages first")
    return path


def _write_jsonl(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    rows = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _touch_run_meta(cfg: PipelineConfig, stage: str) -> None:
    path = _artifact(cfg, RUN_META)
    meta = {}
    if path.is_file():
        meta = json.loads(path.read_text(encoding="utf-8"))
    meta[stage] = {"completed_at": datetime.now(timezone.utc).isoformat()}
    _write_json(path, meta)


def stage_ingest(cfg: PipelineConfig) -> None:
    """Read the manifest, canonicalize every source document."""
    metas = load_manifest(cfg.manifest_path)
    base = Path(cfg.manifest_path).parent
    rows = []
    for meta in metas:
        source = Path(meta.source_path)
        if not source.is_absolute():
            source = base / source
        if not source.is_file():
            raise MissingArtifact(f"source file for {meta.id} not found: {source}")
        raw = source.read_text(encoding="utf-8")
        if meta.corpus_kind is CorpusKind.INQUIRY_TRANSCRIPT:
            raw = extract_witness_text(parse_transcript_turns(raw))
        text = canonicalize(raw)
        doc = Document(meta=meta, text=text)
        rows.append(
            {
                "id": meta.id,
                "country": meta.country.value,
                "corpus_kind": meta.corpus_kind.value,
                "org_name": meta.org_name,
                "org_category": meta.org_category.value,
                "source_path": meta.source_path,
                "text": doc.text,
            }
        )
    _write_jsonl(_artifact(cfg, DOCUMENTS), rows)
    _touch_run_meta(cfg, "ingest")
    log.info("ingested %d documents", len(rows))


def _load_documents(cfg: PipelineConfig) -> list[Document]:
    rows = _read_jsonl(_artifact(cfg, DOCUMENTS, must_exist=True))
    docs = []
    for row in rows:
        meta = DocumentMeta(
            id=row["id"],
            country=Country(row["country"]),
            corpus_kind=CorpusKind(row["corpus_kind"]),
            org_name=row["org_name"],
            org_category=OrgCategory(row["org_category"]),
            source_path=row["source_path"],
        )
        docs.append(Document(meta=meta, text=row["text"]))
    return docs


def stage_segment(cfg: PipelineConfig) -> None:
    """Split canonicalized documents into sentences."""
    abbreviations = None
    if cfg.abbreviations_path is not None:
        abbreviations = read_abbreviations(cfg.abbreviations_path)
    rows = []
    count = 0
    for doc in _load_documents(cfg):
        for sentence in segment(doc, abbreviations):
            rows.append(
                {
                    "doc_id": sentence.doc_id,
                    "index": sentence.index,
                    "text": sentence.text,
                    "start": sentence.start,
                    "end": sentence.end,
                }
            )
            count += 1
    _write_jsonl(_artifact(cfg, SENTENCES), rows)
    _touch_run_meta(cfg, "segment")
    log.info("segmented %d sentences", count)


def _load_sentences(cfg: PipelineConfig) -> list[Sentence]:
    rows = _read_jsonl(_artifact(cfg, SENTENCES, must_exist=True))
    return [
        Sentence(
            doc_id=row["doc_id"],
            index=row["index"],
            text=row["text"],
            start=row["start"],
            end=row["end"],
        )
        for row in rows
    ]


def stage_filter(cfg: PipelineConfig) -> None:
    """Keep sentences that match both the device and the evidence lexicon."""
    ends_lexicon = load_lexicon(cfg.ends_lexicon_path, "ends") if cfg.ends_lexicon_path else None
    evidence_lexicon = (
        load_lexicon(cfg.evidence_lexicon_path, "evidence") if cfg.evidence_lexicon_path else None
    )
    rows = []
    for sentence in _load_sentences(cfg):
        ev = is_evidence(sentence, ends_lexicon, evidence_lexicon)
        if ev is None:
            continue
        rows.append(
            {
                "sentence_id": sentence_id(sentence),
                "doc_id": sentence.doc_id,
                "index": sentence.index,
                "text": sentence.text,
                "start": sentence.start,
                "end": sentence.end,
                "ends_matches": [
                    {"phrase": m.phrase, "start": m.start, "end": m.end} for m in ev.ends_matches
                ],
                "evidence_matches": [
                    {"phrase": m.phrase, "start": m.start, "end": m.end}
                    for m in ev.evidence_matches
                ],
            }
        )
    _write_jsonl(_artifact(cfg, EVIDENCE), rows)
    _touch_run_meta(cfg, "filter")
    log.info("retained %d evidence sentences", len(rows))


def load_evidence(cfg: PipelineConfig) -> list[EvidenceSentence]:
    rows = _read_jsonl(_artifact(cfg, EVIDENCE, must_exist=True))
    out = []
    for row in rows:
        sentence = Sentence(
            doc_id=row["doc_id"],
            index=row["index"],
            text=row["text"],
            start=row["start"],
            end=row["end"],
        )
        out.append(
            EvidenceSentence(
                sentence=sentence,
                ends_matches=tuple(TermMatch(**m) for m in row["ends_matches"]),
                evidence_matches=tuple(TermMatch(**m) for m in row["evidence_matches"]),
            )
        )
    return out


def make_backend(cfg: PipelineConfig, cache: CompletionCache):
    if cfg.backend == "scripted":
        return ScriptedBackend.from_jsonl(cfg.scripted_fixture_path)
    if cfg.backend == "replay":
        return ReplayBackend(cache)
    return LiveBackend()


def stage_classify(cfg: PipelineConfig) -> None:
    """Label every evidence sentence through the configured backend."""
    evidence = load_evidence(cfg)
    cache = CompletionCache(_artifact(cfg, CACHE))
    backend = make_backend(cfg, cache)
    records = classifier.classify_corpus(
        evidence,
        backend,
        cfg.decoding,
        cache,
        concurrency_limit=cfg.concurrency_limit,
        retry_limit=cfg.retry_limit,
    )
    _write_jsonl(_artifact(cfg, RECORDS), (classifier.record_to_json(r) for r in records))
    _touch_run_meta(cfg, "classify")
    failed = sum(1 for r in records if not r.labeled)
    log.info("classified %d sentences (%d failed)", len(records), failed)


def load_records(cfg: PipelineConfig) -> list[ClassificationRecord]:
    rows = _read_jsonl(_artifact(cfg, RECORDS, must_exist=True))
    return [classifier.record_from_json(row) for row in rows]


def _sentence_index(cfg: PipelineConfig) -> dict[str, str]:
    rows = _read_jsonl(_artifact(cfg, EVIDENCE, must_exist=True))
    return {row["sentence_id"]: row["doc_id"] for row in rows}


def annotation_sessions(
    cfg: PipelineConfig,
) -> tuple[dict[str, annotation.AnnotationSession], dict[str, str]]:
    """Base A/B sessions over the seeded sample, with the event log folded in.

    Returns (sessions, texts) where texts maps sentence ids to sentence text
    for every evidence sentence, not just the sampled ones; the adjudication
    session may label sentences outside the sample.
    """
    evidence = load_evidence(cfg)
    texts = {sentence_id(ev.sentence): ev.sentence.text for ev in evidence}
    items = annotation.sample_for_annotation(evidence, cfg.annotation_sample_size, cfg.seed)
    sessions = {
        cfg.annotator_a: annotation.new_session(cfg.annotator_a, cfg.annotator_a, items),
        cfg.annotator_b: annotation.new_session(cfg.annotator_b, cfg.annotator_b, items),
    }
    events = annotation.load_label_events(_artifact(cfg, SESSIONS))
    adjudicated = [e for e in events if e["session_id"] == ADJUDICATION_SESSION]
    sessions = annotation.fold_events(sessions, events)
    if adjudicated:
        adj_items = []
        for event in adjudicated:
            if event["sentence_id"] not in adj_items:
                adj_items.append(event["sentence_id"])
        adj = annotation.new_session(ADJUDICATION_SESSION, ADJUDICATION_SESSION, adj_items)
        sessions[ADJUDICATION_SESSION] = annotation.fold_events({ADJUDICATION_SESSION: adj}, adjudicated)[
            ADJUDICATION_SESSION
        ]
    return sessions, texts


def stage_agree(cfg: PipelineConfig) -> annotation.AgreementResult:
    """Cohen's kappa between the two annotator sessions."""
    _artifact(cfg, SESSIONS, must_exist=True)
    sessions, _ = annotation_sessions(cfg)
    result = annotation.cohen_kappa(sessions[cfg.annotator_a], sessions[cfg.annotator_b])
    _write_json(
        _artifact(cfg, AGREEMENT),
        {
            "kappa": result.kappa,
            "p_o": result.p_o,
            "p_e": result.p_e,
            "n_items": result.n_items,
            "labels": [label.value for label in annotation.LABEL_ORDER],
            "cross_table": [list(row) for row in result.cross_table],
        },
    )
    _touch_run_meta(cfg, "agree")
    print(f"kappa={result.kappa:.4f} over {result.n_items} items")
    return result


def stage_evaluate(cfg: PipelineConfig) -> None:
    """Score predictions against adjudicated gold labels."""
    _artifact(cfg, SESSIONS, must_exist=True)
    sessions, _ = annotation_sessions(cfg)
    gold = annotation.merge_gold(
        sessions[cfg.annotator_a],
        sessions[cfg.annotator_b],
        sessions.get(ADJUDICATION_SESSION),
    )
    by_id = {r.sentence_id: r for r in load_records(cfg)}
    gold_labels: list[Label] = []
    predicted: list[Label] = []
    excluded = 0
    for sid, label in gold.items():
        record = by_id.get(sid)
        if record is None or record.label is None:
            excluded += 1
            continue
        gold_labels.append(label)
        predicted.append(record.label)
    cm = stats.confusion(gold_labels, predicted)
    m = stats.metrics(cm)
    _write_json(
        _artifact(cfg, EVALUATION),
        {
            "n_gold": len(gold),
            "n_evaluated": len(gold_labels),
            "n_excluded": excluded,
            "confusion": [list(row) for row in cm.counts],
            "labels": [label.value for label in stats.LABEL_ORDER],
            "accuracy": m.accuracy,
            "micro": {"precision": m.micro_precision, "recall": m.micro_recall, "f1": m.micro_f1},
            "macro": {"precision": m.macro_precision, "recall": m.macro_recall, "f1": m.macro_f1},
            "per_class": {
                label.value: {
                    "precision": score.precision,
                    "recall": score.recall,
                    "f1": score.f1,
                }
                for label, score in m.per_class.items()
            },
        },
    )
    _touch_run_meta(cfg, "evaluate")
    print(f"accuracy={m.accuracy:.4f} over {len(gold_labels)} gold items")


def _country_totals(cfg: PipelineConfig):
    index = _sentence_index(cfg)
    country_by_doc = {doc.meta.id: doc.meta.country for doc in _load_documents(cfg)}
    totals = {Country.AU: {"helpful": 0, "harmful": 0}, Country.UK: {"helpful": 0, "harmful": 0}}
    for record in load_records(cfg):
        if record.label is None or record.label is Label.NEITHER:
            continue
        country = country_by_doc[index[record.sentence_id]]
        totals[country][record.label.value] += 1
    return totals


def stage_analyze(cfg: PipelineConfig) -> None:
    """Chi-square test of label direction against country."""
    totals = _country_totals(cfg)
    observed = (
        (totals[Country.AU]["helpful"], totals[Country.AU]["harmful"]),
        (totals[Country.UK]["helpful"], totals[Country.UK]["harmful"]),
    )
    payload: dict = {
        "observed": {
            "AU": dict(totals[Country.AU]),
            "UK": dict(totals[Country.UK]),
        }
    }
    try:
        table = stats.ContingencyTable2x2(observed)
        result = stats.pearson_chi_square(table)
    except (ValueError, stats.DegenerateMargin) as exc:
        payload["chi_square"] = None
        payload["note"] = str(exc)
    else:
        payload["chi_square"] = {
            "statistic": result.statistic,
            "df": result.df,
            "p_value": result.p_value,
            "expected": [list(row) for row in result.expected],
            "low_expected": result.low_expected,
        }
    _write_json(_artifact(cfg, ANALYSIS), payload)
    _touch_run_meta(cfg, "analyze")


def stage_report(cfg: PipelineConfig) -> report.Breakdown:
    """Render the corpus/country breakdown in all three formats."""
    records = load_records(cfg)
    metas = [doc.meta for doc in _load_documents(cfg)]
    breakdown = report.aggregate(records, metas, _sentence_index(cfg))
    for name, fmt in ((BREAKDOWN_CSV, "csv"), (BREAKDOWN_TXT, "text"), (BREAKDOWN_JSON, "machine")):
        path = _artifact(cfg, name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(report.render(breakdown, fmt))
    _touch_run_meta(cfg, "report")
    print(report.render(breakdown, "text").decode("utf-8"), end="")
    return breakdown


def run_all(cfg: PipelineConfig) -> None:
    stage_ingest(cfg)
    stage_segment(cfg)
    stage_filter(cfg)
    stage_classify(cfg)
    stage_analyze(cfg)
    stage_report(cfg)
