"""End-to-end checks of the staged pipeline over the small bundled corpus."""

import json
from collections import Counter

import pytest

from stancelab import annotation, pipeline
from stancelab.annotation import IncompleteAdjudication
from stancelab.classifier import Label
from stancelab.config import load_config
from stancelab.corpus import canonicalize, extract_witness_text, parse_transcript_turns
from stancelab.pipeline import MissingArtifact
from stancelab.report import parse_breakdown_csv

H, M, N = Label.HELPFUL, Label.HARMFUL, Label.NEITHER
LABELS = (H, M, N)


@pytest.fixture()
def cfg(fixtures_dir, tmp_path):
    conf = fixtures_dir / "mini" / "mini.conf"
    return load_config(conf, overrides=[f"work_dir={tmp_path / 'work'}"])


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]


def run_through_classify(cfg) -> None:
    pipeline.stage_ingest(cfg)
    pipeline.stage_segment(cfg)
    pipeline.stage_filter(cfg)
    pipeline.stage_classify(cfg)


def scripted_labels(fixtures_dir) -> dict[str, Label]:
    """sentence text -> label promised by the scripted response fixture"""
    out = {}
    for row in read_jsonl(fixtures_dir / "mini" / "responses.jsonl"):
        _, _, tail = row["response_text"].rpartition("Answer:")
        out[row["sentence_text"]] = Label(tail.strip())
    return out


class TestStages:
    def test_ingest_canonicalizes_each_source(self, cfg, fixtures_dir):
        pipeline.stage_ingest(cfg)
        rows = {row["id"]: row for row in read_jsonl(cfg.work_dir / pipeline.DOCUMENTS)}
        assert sorted(rows) == ["mini_au", "mini_uk"]

        au_raw = (fixtures_dir / "mini" / "mini_au.txt").read_text(encoding="utf-8")
        assert rows["mini_au"]["text"] == canonicalize(au_raw)

        uk_raw = (fixtures_dir / "mini" / "mini_uk.txt").read_text(encoding="utf-8")
        witness = extract_witness_text(parse_transcript_turns(uk_raw))
        assert rows["mini_uk"]["text"] == canonicalize(witness)
        assert rows["mini_uk"]["corpus_kind"] == "INQUIRY_TRANSCRIPT"

    def test_segment_requires_ingest(self, cfg):
        with pytest.raises(MissingArtifact):
            pipeline.stage_segment(cfg)

    def test_filter_retains_the_evidence_sentences(self, cfg):
        pipeline.stage_ingest(cfg)
        pipeline.stage_segment(cfg)
        pipeline.stage_filter(cfg)
        rows = read_jsonl(cfg.work_dir / pipeline.EVIDENCE)
        assert len(rows) == 14
        per_doc = Counter(row["doc_id"] for row in rows)
        assert per_doc == {"mini_au": 8, "mini_uk": 6}
        for row in rows:
            assert row["sentence_id"] == f"{row['doc_id']}#{row['index']}"
            assert row["ends_matches"] and row["evidence_matches"]

    def test_classify_requires_filter(self, cfg):
        pipeline.stage_ingest(cfg)
        pipeline.stage_segment(cfg)
        with pytest.raises(MissingArtifact):
            pipeline.stage_classify(cfg)

    def test_classify_matches_the_scripted_responses(self, cfg, fixtures_dir):
        run_through_classify(cfg)
        evidence = read_jsonl(cfg.work_dir / pipeline.EVIDENCE)
        records = read_jsonl(cfg.work_dir / pipeline.RECORDS)
        assert [r["sentence_id"] for r in records] == [e["sentence_id"] for e in evidence]

        expected = scripted_labels(fixtures_dir)
        text_by_id = {e["sentence_id"]: e["text"] for e in evidence}
        for row in records:
            assert row["label"] == expected[text_by_id[row["sentence_id"]]].value
            assert row["failure"] is None
            assert row["attempts"] == 1
            assert "timestamp" not in row
        # every response was cached for replay
        assert len(read_jsonl(cfg.work_dir / pipeline.CACHE)) == 14


def label_schedule(items) -> tuple[dict[str, Label], dict[str, Label]]:
    """Two full labelings of the sampled items that disagree on the first two."""
    a = {sid: LABELS[i % 3] for i, sid in enumerate(items)}
    b = dict(a)
    for sid in items[:2]:
        b[sid] = LABELS[(LABELS.index(a[sid]) + 1) % 3]
    return a, b


def append_all(log_path, session, labels: dict[str, Label]) -> None:
    for sid, label in labels.items():
        annotation.append_label_event(log_path, session, sid, label)


def independent_kappa(pairs) -> float:
    # direct chance-corrected agreement, no shared code with the library
    n = len(pairs)
    p_o = sum(a is b for a, b in pairs) / n
    first = Counter(a for a, _ in pairs)
    second = Counter(b for _, b in pairs)
    p_e = sum(first[label] * second[label] for label in set(first) | set(second)) / (n * n)
    return (p_o - p_e) / (1 - p_e)


class TestAnnotationFlow:
    def test_sessions_cover_the_seeded_sample(self, cfg):
        run_through_classify(cfg)
        sessions, texts = pipeline.annotation_sessions(cfg)
        a, b = sessions[cfg.annotator_a], sessions[cfg.annotator_b]
        assert a.items == b.items
        assert len(a.items) == cfg.annotation_sample_size == 10
        assert len(set(a.items)) == 10
        assert len(texts) == 14
        assert all(sid in texts for sid in a.items)
        # resampling is deterministic
        again, _ = pipeline.annotation_sessions(cfg)
        assert again[cfg.annotator_a].items == a.items

    def test_agree_requires_an_event_log(self, cfg):
        run_through_classify(cfg)
        with pytest.raises(MissingArtifact):
            pipeline.stage_agree(cfg)

    def test_agree_writes_the_agreement_artifact(self, cfg, capsys):
        run_through_classify(cfg)
        sessions, _ = pipeline.annotation_sessions(cfg)
        items = list(sessions[cfg.annotator_a].items)
        labels_a, labels_b = label_schedule(items)
        log = cfg.work_dir / pipeline.SESSIONS
        append_all(log, sessions[cfg.annotator_a], labels_a)
        append_all(log, sessions[cfg.annotator_b], labels_b)

        result = pipeline.stage_agree(cfg)
        payload = json.loads((cfg.work_dir / pipeline.AGREEMENT).read_text(encoding="utf-8"))

        pairs = [(labels_a[sid], labels_b[sid]) for sid in items]
        assert result.kappa == pytest.approx(independent_kappa(pairs), abs=1e-12)
        assert payload["kappa"] == result.kappa
        assert payload["n_items"] == 10
        assert payload["labels"] == ["helpful", "harmful", "neither"]
        assert sum(sum(row) for row in payload["cross_table"]) == 10
        assert "kappa=" in capsys.readouterr().out

    def test_evaluate_requires_adjudicated_disagreements(self, cfg):
        run_through_classify(cfg)
        sessions, _ = pipeline.annotation_sessions(cfg)
        items = list(sessions[cfg.annotator_a].items)
        labels_a, labels_b = label_schedule(items)
        log = cfg.work_dir / pipeline.SESSIONS
        append_all(log, sessions[cfg.annotator_a], labels_a)
        append_all(log, sessions[cfg.annotator_b], labels_b)
        with pytest.raises(IncompleteAdjudication):
            pipeline.stage_evaluate(cfg)

    def test_evaluate_scores_predictions_against_gold(self, cfg, fixtures_dir, capsys):
        run_through_classify(cfg)
        sessions, texts = pipeline.annotation_sessions(cfg)
        items = list(sessions[cfg.annotator_a].items)
        labels_a, labels_b = label_schedule(items)
        log = cfg.work_dir / pipeline.SESSIONS
        append_all(log, sessions[cfg.annotator_a], labels_a)
        append_all(log, sessions[cfg.annotator_b], labels_b)

        adjudicated = {items[0]: N, items[1]: H}
        adj_session = annotation.new_session(
            pipeline.ADJUDICATION_SESSION, pipeline.ADJUDICATION_SESSION, list(adjudicated)
        )
        append_all(log, adj_session, adjudicated)

        pipeline.stage_evaluate(cfg)
        payload = json.loads((cfg.work_dir / pipeline.EVALUATION).read_text(encoding="utf-8"))

        gold = {sid: labels_a[sid] for sid in items[2:]}
        gold.update(adjudicated)
        predicted = scripted_labels(fixtures_dir)
        hits = sum(gold[sid] is predicted[texts[sid]] for sid in items)

        assert payload["n_gold"] == 10
        assert payload["n_evaluated"] == 10
        assert payload["n_excluded"] == 0
        assert payload["accuracy"] == pytest.approx(hits / 10, abs=1e-15)
        assert payload["labels"] == ["helpful", "harmful", "neither"]
        confusion = payload["confusion"]
        assert sum(sum(row) for row in confusion) == 10
        order = [Label(v) for v in payload["labels"]]
        for i, g in enumerate(order):
            for j, p in enumerate(order):
                want = sum(
                    gold[sid] is g and predicted[texts[sid]] is p for sid in items
                )
                assert confusion[i][j] == want
        assert "accuracy=" in capsys.readouterr().out


class TestAnalysis:
    def test_analyze_counts_direction_by_country(self, cfg):
        run_through_classify(cfg)
        pipeline.stage_analyze(cfg)
        payload = json.loads((cfg.work_dir / pipeline.ANALYSIS).read_text(encoding="utf-8"))
        assert payload["observed"] == {
            "AU": {"helpful": 3, "harmful": 3},
            "UK": {"helpful": 2, "harmful": 2},
        }
        chi = payload["chi_square"]
        # proportions are identical across countries, so no association at all
        assert chi["statistic"] == 0.0
        assert chi["p_value"] == 1.0
        assert chi["df"] == 1
        assert chi["low_expected"] is True

    def test_analyze_survives_degenerate_counts(self, cfg):
        run_through_classify(cfg)
        records_path = cfg.work_dir / pipeline.RECORDS
        rows = read_jsonl(records_path)
        for row in rows:
            row["label"] = "neither"
        records_path.write_text(
            "".join(json.dumps(row, sort_keys=True) + "\n" for row in rows), encoding="utf-8"
        )
        pipeline.stage_analyze(cfg)
        payload = json.loads((cfg.work_dir / pipeline.ANALYSIS).read_text(encoding="utf-8"))
        assert payload["chi_square"] is None
        assert payload["note"]
        assert payload["observed"]["AU"] == {"helpful": 0, "harmful": 0}


class TestReport:
    def test_report_renders_all_three_formats(self, cfg, capsys):
        run_through_classify(cfg)
        pipeline.stage_analyze(cfg)
        pipeline.stage_report(cfg)
        csv_rows = parse_breakdown_csv((cfg.work_dir / pipeline.BREAKDOWN_CSV).read_bytes())
        by_key = {(row.corpus, row.country.value): row for row in csv_rows}
        assert by_key[("ERKU", "AU")].n_evidence == 8
        assert by_key[("INQUIRY_TRANSCRIPT", "UK")].n_evidence == 6
        assert by_key[("TOTAL", "UK")].n_evidence == 6
        machine = json.loads((cfg.work_dir / pipeline.BREAKDOWN_JSON).read_text(encoding="utf-8"))
        assert len(machine["rows"]) == 8
        text = (cfg.work_dir / pipeline.BREAKDOWN_TXT).read_text(encoding="utf-8")
        assert "Total observed" in text
        assert text in capsys.readouterr().out


class TestRunAll:
    def test_run_all_matches_the_stagewise_artifacts(self, fixtures_dir, tmp_path):
        conf = fixtures_dir / "mini" / "mini.conf"
        cfg_a = load_config(conf, overrides=[f"work_dir={tmp_path / 'a'}"])
        cfg_b = load_config(conf, overrides=[f"work_dir={tmp_path / 'b'}"])
        pipeline.run_all(cfg_a)
        for stage in (
            pipeline.stage_ingest,
            pipeline.stage_segment,
            pipeline.stage_filter,
            pipeline.stage_classify,
            pipeline.stage_analyze,
            pipeline.stage_report,
        ):
            stage(cfg_b)
        for name in (
            pipeline.DOCUMENTS,
            pipeline.SENTENCES,
            pipeline.EVIDENCE,
            pipeline.RECORDS,
            pipeline.BREAKDOWN_CSV,
            pipeline.ANALYSIS,
        ):
            assert (cfg_a.work_dir / name).read_bytes() == (cfg_b.work_dir / name).read_bytes()

    def test_run_meta_tracks_completed_stages(self, cfg):
        pipeline.run_all(cfg)
        meta = json.loads((cfg.work_dir / pipeline.RUN_META).read_text(encoding="utf-8"))
        assert set(meta) == {"ingest", "segment", "filter", "classify", "analyze", "report"}
        assert all("completed_at" in entry for entry in meta.values())
