"""Generate the shipped fixture corpus and its frozen truth files.

Every truth file is derived from the construction plan in this script (cell
counts, label schedules, sentence ordering), never from recorded library
output. The library is only used as a generation-time gate: if the corpus we
built does not canonicalize/segment/filter to exactly the planned truth, the
generator aborts and the templates get fixed, not the truth.

Run from the repository root:

    python3 scripts/make_fixtures.py            # write fixtures/
    python3 scripts/make_fixtures.py --check    # verify fixtures/ match
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from stancelab.classifier import parse_response, prompt_hash, prompt_template, render_prompt, SLOT
from stancelab.corpus import (
    CorpusKind,
    Country,
    Document,
    DocumentMeta,
    OrgCategory,
    canonicalize,
    extract_witness_text,
    parse_transcript_turns,
)
from stancelab.evidence_filter import is_evidence
from stancelab.report import CSV_HEADER
from stancelab.segmenter import segment

MODEL_ID = "gpt-4-0613"

# One document per corpus/country cell; label counts pin the per-cell totals
# the report must reproduce exactly.
CELLS = (
    ("erku_au", CorpusKind.ERKU, Country.AU, 7, 94, 117,
     "Therapeutic Products Administration", OrgCategory.GOVERNMENT),
    ("erku_uk", CorpusKind.ERKU, Country.UK, 159, 86, 603,
     "Office for Health Improvement", OrgCategory.GOVERNMENT),
    ("subm_au", CorpusKind.INQUIRY_SUBMISSION, Country.AU, 78, 203, 279,
     "Smokefree Futures Alliance", OrgCategory.CHARITY),
    ("subm_uk", CorpusKind.INQUIRY_SUBMISSION, Country.UK, 118, 26, 240,
     "Royal College of Clinical Practice", OrgCategory.PROFESSIONAL_BODY),
    ("trans_au", CorpusKind.INQUIRY_TRANSCRIPT, Country.AU, 17, 35, 36,
     "Population Health Research Group", OrgCategory.RESEARCH_GROUP),
    ("trans_uk", CorpusKind.INQUIRY_TRANSCRIPT, Country.UK, 11, 2, 41,
     "Independent Witness Panel", OrgCategory.OTHER),
)

# Three seeded example sentences that the filter must retain; each replaces
# the first generated sentence of its label in the named document.
ANCHORS = {
    ("erku_uk", "helpful"): (
        "Observational data from the UK suggest that there has been an increase in the "
        "popularity of e-cigarettes accompanied by a reduction in smoking cigarettes."
    ),
    ("erku_au", "harmful"): (
        "The Department considers that the evidence base supports maintaining and, where "
        "appropriate, strengthening the current controls that apply to the marketing and "
        "use of e-cigarettes in Australia."
    ),
    ("subm_uk", "neither"): (
        "It is clear that more research is needed, and that concerns about the potential "
        "for e-cigarettes to act as a gateway for non-smokers into tobacco smoking cannot "
        "be dismissed at this stage."
    ),
}

DEVICE_TERMS = (
    "e-cigarettes", "e-cigarette", "electronic cigarettes", "electronic cigarette",
    "vaping", "vapes", "vapers", "vaper", "e-cigs", "e-cig", "ecigs", "ecig",
    "e cigs", "e cig", "e-pens", "e-pen", "vaporisers", "vaporiser",
    "vaporizers", "vaporizer", "ENDS", "EC", "ECs",
)

EVIDENCE_TERMS = (
    "evidence", "study", "studies", "research", "report", "reports", "finding",
    "findings", "analysis", "analyses", "literature", "data", "survey", "surveys",
)

TEMPLATES = {
    "helpful": (
        "In case {n}, the {ev} indicated that {ends} helped adult smokers quit.",
        "Witnesses in case {n} told us the {ev} shows {ends} displacing cigarettes among adults.",
        "According to the {ev} in case {n}, switching to {ends} reduced smoking rates.",
        "Case {n} summarises {ev} that {ends} supported cessation attempts.",
        "The {ev} cited in case {n} found {ends} cutting relapse for quitters.",
        "For case {n}, recent {ev} suggests {ends} helped heavy smokers cut down.",
    ),
    "harmful": (
        "In case {n}, the {ev} linked {ends} to nicotine uptake among teenagers.",
        "The {ev} in case {n} associates {ends} with a gateway into smoking.",
        "Case {n} records {ev} that {ends} exposed bystanders to toxicants.",
        "According to the {ev} in case {n}, {ends} renormalised smoking imagery.",
        "The {ev} presented in case {n} found {ends} flavours appealing to minors.",
        "For case {n}, the {ev} shows {ends} batteries caused household fires.",
    ),
    "neither": (
        "In case {n}, the {ev} on {ends} remains inconclusive.",
        "Case {n} notes further {ev} on {ends} has been commissioned.",
        "The {ev} about {ends} in case {n} is still under review.",
        "According to case {n}, the {ev} cataloguing {ends} usage is ongoing.",
        "For case {n}, members requested updated {ev} regarding {ends}.",
        "The {ev} appendix for case {n} lists {ends} prevalence by region.",
    ),
}

# Fillers must never satisfy both lexicons. F9/F10 carry a device term only,
# F14/F15 an evidence term only, F6-F8 and F11-F13 are boundary near-misses
# (ends, ecigarette, datalog, Researchers, reporter, surveyor).
FILLERS = (
    "Case {n} was adjourned until the next sitting day.",
    "The committee thanked witnesses for attending case {n}.",
    "Minutes for case {n} were circulated to members.",
    "In case {n}, the chair outlined procedural matters.",
    "Travel expenses for case {n} await approval.",
    "Catering for case {n} ends when the session closes.",
    "Studying ecigarette policy in case {n} takes months.",
    "The datalog for case {n} is stored offsite.",
    "Vapers attended case {n} as observers.",
    "The vaping demonstration in case {n} was cancelled.",
    "Researchers were unavailable for case {n}.",
    "A reporter covered case {n} for the paper of record.",
    "The surveyor measured the room for case {n}.",
    "Fresh evidence in case {n} concerned catering contracts.",
    "The survey for case {n} covered staffing levels.",
)

HEADINGS = (
    "Background", "Procedural notes", "Session overview", "Hearing schedule",
    "Context", "Administrative matters", "Opening remarks", "Closing remarks",
)

QUESTIONER_LINES = (
    "Does the evidence on vaping worry you?",
    "Which studies on e-cigarettes should we read?",
    "Can you summarise the research on ENDS for us?",
    "What do the data say about vapers in this cohort?",
)

RESPONSE_VARIANTS = (
    "Reasoning: {reason} Answer: {label}",
    "Reasoning: {reason}\nAnswer: {label}.",
    'Reasoning: {reason} The final answer follows. Answer: "{label}"',
    "REASONING: {reason} ANSWER: {upper}",
    "Reasoning: {reason}\n\nAnswer:\n{label}",
    "Reasoning: {reason} Answer: {label}, though context matters.",
)

# Hand-typed from the published summary table; the header lives in report.py.
EXPECTED_BREAKDOWN_ROWS = (
    "ERKU,AU,218,7,3,94,43,117,0",
    "ERKU,UK,848,159,19,86,10,603,0",
    "INQUIRY_SUBMISSION,AU,560,78,14,203,36,279,0",
    "INQUIRY_SUBMISSION,UK,384,118,31,26,7,240,0",
    "INQUIRY_TRANSCRIPT,AU,88,17,19,35,40,36,0",
    "INQUIRY_TRANSCRIPT,UK,54,11,20,2,4,41,0",
    "TOTAL,AU,866,102,12,332,38,432,0",
    "TOTAL,UK,1286,288,22,114,9,884,0",
)


class Counter:
    def __init__(self):
        self.value = 0

    def next(self) -> str:
        self.value += 1
        return f"{self.value:04d}"


def build_label_schedule(doc_id: str, helpful: int, harmful: int, neither: int) -> list[str]:
    labels = ["helpful"] * helpful + ["harmful"] * harmful + ["neither"] * neither
    random.Random(f"schedule:{doc_id}").shuffle(labels)
    return labels


def make_evidence_sentence(label: str, ordinal: int, counter: Counter) -> str:
    template = TEMPLATES[label][ordinal % len(TEMPLATES[label])]
    ends = DEVICE_TERMS[ordinal % len(DEVICE_TERMS)]
    ev = EVIDENCE_TERMS[ordinal % len(EVIDENCE_TERMS)]
    return template.format(n=counter.next(), ev=ev, ends=ends)


def build_elements(doc_id: str, labels: list[str], counter: Counter, with_headings: bool):
    """Ordered (text, label-or-None) pairs; None marks non-evidence elements."""
    elements: list[tuple[str, str | None]] = []
    anchor_pending = {lab: text for (d, lab), text in ANCHORS.items() if d == doc_id}
    filler_i = 0
    for i, label in enumerate(labels):
        if with_headings and i % 40 == 0:
            elements.append((HEADINGS[(i // 40) % len(HEADINGS)], None))
        if label in anchor_pending:
            elements.append((anchor_pending.pop(label), label))
        else:
            elements.append((make_evidence_sentence(label, i, counter), label))
        if i % 5 == 4:
            elements.append((FILLERS[filler_i % len(FILLERS)].format(n=counter.next()), None))
            filler_i += 1
    if anchor_pending:
        raise AssertionError(f"{doc_id}: anchors left unplaced: {sorted(anchor_pending)}")
    return elements


def assemble_prose(elements) -> str:
    """Join elements into canonical text: headings own a block, sentences run
    in paragraphs of eight."""
    paragraphs: list[str] = []
    current: list[str] = []
    for text, label in elements:
        is_heading = label is None and not text.endswith((".", "!", "?"))
        if is_heading:
            if current:
                paragraphs.append(" ".join(current))
                current = []
            paragraphs.append(text)
            continue
        current.append(text)
        if len(current) == 8:
            paragraphs.append(" ".join(current))
            current = []
    if current:
        paragraphs.append(" ".join(current))
    return "\n\n".join(paragraphs)


def assemble_transcript(doc_id: str, elements, speaker: str):
    """Group sentences into witness turns and interleave questioner turns.

    Returns (raw transcript text, canonical witness text).
    """
    rng = random.Random(f"turns:{doc_id}")
    utterances: list[str] = []
    pending = [text for text, _ in elements]
    while pending:
        take = min(rng.randint(1, 3), len(pending))
        utterances.append(" ".join(pending[:take]))
        pending = pending[take:]
    lines: list[str] = []
    for i, utterance in enumerate(utterances):
        if i % 6 == 0:
            lines.append(f"questioner\tChair\t{QUESTIONER_LINES[(i // 6) % len(QUESTIONER_LINES)]}")
        lines.append(f"witness\t{speaker}\t{utterance}")
    raw = "\n".join(lines) + "\n"
    canonical = "\n".join(utterances)
    return raw, canonical


def inject_markers(body: str, elements) -> str:
    """Plant footnote markers that canonicalization must strip back out."""
    marked = body
    footnote = 1
    for i, (text, label) in enumerate(elements):
        if label is None:
            continue
        if i % 97 == 3 and text in marked:
            marked = marked.replace(text, text.replace(" the ", f"[{footnote}] the ", 1), 1)
            footnote += 1
        elif i % 131 == 7 and text in marked:
            first_word = text.split(" ", 1)[0]
            marked = marked.replace(text, text.replace(first_word, first_word + "¹⁴", 1), 1)
    return marked


REFERENCE_BLOCKS = {
    "erku_au": "\n\nReferences\n\n[1] Annual compliance digest, vol 3.\n[2] Regional enforcement bulletin.\n",
    "erku_uk": "\n\nBibliography\n\n[1] Health improvement compendium.\n",
    "subm_au": "\n\nEndnotes\n\n[1] Alliance position archive.\n",
}


def build_main_corpus():
    counter = Counter()
    docs = []
    for doc_id, kind, country, n_help, n_harm, n_neither, org, category in CELLS:
        labels = build_label_schedule(doc_id, n_help, n_harm, n_neither)
        transcript = kind is CorpusKind.INQUIRY_TRANSCRIPT
        elements = build_elements(doc_id, labels, counter, with_headings=not transcript)
        if transcript:
            speaker = "Dr Watts" if country is Country.AU else "Ms Field"
            raw, canonical = assemble_transcript(doc_id, elements, speaker)
        else:
            body = assemble_prose(elements)
            canonical = body + "\n"
            raw = inject_markers(body, elements)
            if doc_id == "erku_au":
                raw = raw.replace("\n\n", "\n\n\n\n", 1)
            raw = raw + REFERENCE_BLOCKS.get(doc_id, "\n")
            if doc_id == "subm_uk":
                raw = raw.replace("\n", "\r\n")
        docs.append(
            {
                "doc_id": doc_id,
                "kind": kind,
                "country": country,
                "org_name": org,
                "org_category": category,
                "source": f"{doc_id}.txt",
                "raw": raw,
                "canonical": canonical,
                "elements": elements,
            }
        )
    return docs


def manifest_csv(docs) -> str:
    lines = ["id,country,corpus_kind,org_name,org_category,source_path"]
    for doc in docs:
        lines.append(
            ",".join(
                [
                    doc["doc_id"],
                    doc["country"].value,
                    doc["kind"].value,
                    doc["org_name"],
                    doc["org_category"].value,
                    doc["source"],
                ]
            )
        )
    return "\n".join(lines) + "\n"


def evidence_truth(docs):
    """Flatten the construction plan into the frozen truth rows."""
    rows = []
    for doc in docs:
        for index, (text, label) in enumerate(doc["elements"]):
            if label is None:
                continue
            rows.append(
                {
                    "sentence_id": f"{doc['doc_id']}#{index}",
                    "doc_id": doc["doc_id"],
                    "text": text,
                    "label": label,
                }
            )
    return rows


def scripted_responses(truth_rows):
    out = []
    for i, row in enumerate(truth_rows):
        reason = f"deterministic rationale {i:04d}."
        variant = RESPONSE_VARIANTS[i % len(RESPONSE_VARIANTS)]
        response = variant.format(reason=reason, label=row["label"], upper=row["label"].upper())
        out.append({"sentence_text": row["text"], "response_text": response})
    return out


def records_rows(truth_rows, responses):
    rows = []
    for row, scripted in zip(truth_rows, responses):
        prompt = render_prompt(row["text"])
        reasoning, label = parse_response(scripted["response_text"])
        if label.value != row["label"]:
            raise AssertionError(f"{row['sentence_id']}: response parses to {label}, planned {row['label']}")
        rows.append(
            {
                "sentence_id": row["sentence_id"],
                "model_id": MODEL_ID,
                "prompt_hash": prompt_hash(MODEL_ID, prompt),
                "raw_response": scripted["response_text"],
                "reasoning": reasoning,
                "outcome": "labeled",
                "label": row["label"],
                "failure": None,
                "attempts": 1,
            }
        )
    return rows


# --- segmentation gold -------------------------------------------------------

GOLD_PARAGRAPHS: tuple[tuple[str, ...], ...] = (
    ("Inquiry into nicotine products",),
    (
        "The committee met on 4 Sept. 2019 to review submissions.",
        "Dr. Hale tabled the first exhibit.",
        "Exhibit No. 7 contained survey extracts.",
    ),
    (
        "Rates of daily use rose 2.5 times between 2015 and 2019.",
        "The rise was to 4.8 per cent.",
        "Figures appear in Fig. 3 of the bundle.",
        "Eq. 2 defines the adjustment.",
    ),
    (
        "Witnesses disagreed on causes, e.g. pricing and flavours.",
        "Some cited imports, i.e. untaxed devices.",
        "Jones et al. reported similar trends.",
        "The tally was approx. 40 in total.",
    ),
    (
        "J. K. Rowling was not among the witnesses.",
        "Mr. Boyd and Mrs. Lane attended.",
        "Prof. Chen arrived late.",
        "Ms. Ortiz chaired the afternoon.",
    ),
    (
        'The chair asked, "Have members read the papers?"',
        "All had.",
        '"We will adjourn." said no one.',
        "The motion passed (see the annex).",
        "Voting was unanimous.",
        "He said ‘note the time.’",
        "Then he left.",
    ),
    (
        "The proposal stalled... Members moved on.",
        "Totals reached 3.14 per cent.",
        "Nobody objected.",
        "Version 2.0 shipped quietly.",
    ),
    (
        "What did the morning session change?",
        "Very little.",
        "The outcome surprised everyone!",
        "Debate continued.",
        "Did it matter?",
        "No!",
        "Minutes say otherwise.",
    ),
    (
        "The council reviewed totals.",
        "42 items remained.",
        "The figure fell. it recovered later.",
        "Costs grew by 12 per cent.",
        "7 members noted this.",
    ),
    ("Procedural annex",),
    (
        "Plan A vs. Plan B dominated debate.",
        "Neither prevailed.",
        "Compare cf. Ruling 12 for context.",
        "The registrar agreed.",
        "Sessions ran Jan. through Dec. without pause.",
        "Attendance varied.",
    ),
    (
        "U. N. observers were absent.",
        "The final tally was 19.",
        "Formal thanks followed.",
        "The session closed at 5 p.m. sharp.",
    ),
)


def build_segmentation_gold():
    pieces: list[str] = []
    sentences = []
    pos = 0
    for p, paragraph in enumerate(GOLD_PARAGRAPHS):
        if p > 0:
            pieces.append("\n\n")
            pos += 2
        for s, sentence in enumerate(paragraph):
            if s > 0:
                pieces.append(" ")
                pos += 1
            sentences.append(
                {"index": len(sentences), "text": sentence, "start": pos, "end": pos + len(sentence)}
            )
            pieces.append(sentence)
            pos += len(sentence)
    text = "".join(pieces)
    if len(sentences) != 50:
        raise AssertionError(f"gold corpus has {len(sentences)} sentences, wanted 50")
    return {"doc_id": "gold_seg", "text": text, "sentences": sentences}


# --- adversarial response parsing cases --------------------------------------

ADVERSARIAL_CASES: tuple[tuple[str, str | None, str], ...] = (
    ("Reasoning: cites cessation gains. Answer: helpful", "helpful", "canonical form"),
    ("Reasoning: links to youth uptake. Answer: harmful", "harmful", "canonical form"),
    ("Reasoning: no directional claim. Answer: neither", "neither", "canonical form"),
    ("Reasoning: benefit stated.\nAnswer: Helpful", "helpful", "capitalized label"),
    ("REASONING: RISK NOTED. ANSWER: HARMFUL", "harmful", "all caps"),
    ("Reasoning: mixed. Answer:neither", "neither", "no space after marker"),
    ('Reasoning: quit aid. Answer: "helpful"', "helpful", "double quoted"),
    ("Reasoning: toxicant exposure. Answer: 'harmful'.", "harmful", "single quoted"),
    ("Reasoning: prevalence only. Answer: neither.", "neither", "trailing period"),
    ("Reasoning: supports switching. Answer: helpful, with caveats.", "helpful", "trailing clause"),
    ("Reasoning: fire hazard noted. Answer: **harmful**", "harmful", "markdown bold"),
    ("Reasoning: descriptive only. Answer:\nneither", "neither", "newline after marker"),
    ("Reasoning: the word answer appears here. Answer: helpful", "helpful", "decoy word without colon"),
    ("Reasoning: first guess. Answer: harmful\nReasoning: revised. Answer: neither", "neither", "last marker wins"),
    ("Reasoning: cessation evidence. Answer: The label is helpful", "helpful", "token scan"),
    ("Answer: harmful", "harmful", "no reasoning section"),
    ("Some preamble without markers. Answer: neither", "neither", "bare preamble"),
    ("Reasoning: benefit. ANSWER: Helpful.", "helpful", "caps marker mixed label"),
    ("Reasoning: risk. answer: harmful", "harmful", "lowercase marker"),
    ("Reasoning: unclear. Answer:   neither   ", "neither", "padded label"),
    ("Reasoning: aids quitting. Answer: “helpful”", "helpful", "curly quotes"),
    ("Reasoning: gateway concern. Answer: (harmful)", "harmful", "parenthesised"),
    ("Reasoning: registry description. Answer: [neither]", "neither", "bracketed"),
    ("Reasoning: reduces smoking; see studies. Answer: helpful!", "helpful", "exclamation"),
    ("Reasoning: bystander risk. Answer: harmful?", "harmful", "question mark"),
    ("Reasoning: call for more research. Answer: neither;", "neither", "semicolon"),
    ("Reasoning: dual implication resolved to benefit. Answer: helpful\n\n", "helpful", "trailing blank lines"),
    ("Reasoning: youth marketing. Answer: - harmful", "harmful", "dash bullet"),
    ("Reasoning: citation only. Answer: `neither`", "neither", "backticks"),
    ("Reasoning: improves cessation odds. Answer: HELPFUL.", "helpful", "caps label"),
    ("Reasoning: nicotine addiction. Answer: Harmful, definitely.", "harmful", "trailing comment"),
    ("Reasoning: scoping note. Answer: Neither", "neither", "capitalized neither"),
    ("Reasoning: explained above. The final answer follows. Answer: helpful", "helpful", "answer as plain word earlier"),
    ("Reasoning: see prior answer: harmful", "harmful", "marker inside reasoning anchors parse"),
    ("Reasoning: none. Answer: harmful helpful", "harmful", "first resolving token wins"),
    ("", None, "empty response"),
    ("The model refused to answer.", None, "no marker"),
    ("Reasoning: thorough but no verdict.", None, "reasoning only"),
    ("Answer:", None, "marker with nothing after"),
    ("Answer: maybe", None, "unknown label"),
    ("Answer: helpfulness", None, "label embedded in longer token"),
    ("Answer: unhelpful", None, "negated label"),
    ("Answer : helpful", None, "space before colon"),
    ("answer helpful", None, "missing colon"),
    ("Reasoning: x. ANSWER - harmful", None, "dash instead of colon"),
    ("Reasoning: y. Answer: 123", None, "numeric token"),
    ("Reasoning: z. Answer: ???", None, "punctuation only"),
    ("I cannot classify this sentence.", None, "refusal"),
    ("Reasoning: a. Answer: neutral", None, "out of scheme label"),
    ("Reasoning: b. Answer: helpful-ish", None, "hyphenated token"),
)


def adversarial_rows():
    return [
        {"response_text": raw, "expected_label": expected, "note": note}
        for raw, expected, note in ADVERSARIAL_CASES
    ]


# --- mini corpus --------------------------------------------------------------

MINI_AU_SENTENCES: tuple[tuple[str, str | None], ...] = (
    ("The spring review opened with procedure.", None),
    ("Evidence tabled today shows vaping aided quit attempts.", "helpful"),
    ("A cohort study found vapers returning to cigarettes less often.", "helpful"),
    ("New analysis links e-cigarettes to teen experimentation.", "harmful"),
    ("The survey recorded rising ENDS curiosity among minors.", "harmful"),
    ("Monthly reports on e-cig sales remain incomplete.", "neither"),
    ("Further research on vaporisers was commissioned.", "neither"),
    ("Members adjourned before lunch.", None),
    ("Fresh data suggest e-cigarettes displaced some smoking.", "helpful"),
    ("One report tied vaping liquids to poisoning calls.", "harmful"),
)

MINI_UK_TURNS: tuple[tuple[str, str, str, str | None], ...] = (
    ("questioner", "Chair", "Does the evidence on vaping concern you?", None),
    ("witness", "Dr Patel", "Our literature scan found e-cigs helping committed quitters.", "helpful"),
    ("witness", "Dr Patel", "Panel data show vaping expanding among never-smokers.", "harmful"),
    ("witness", "Dr Patel", "The findings on e-pens remain preliminary.", "neither"),
    ("questioner", "Chair", "Which studies on e-cigarettes matter most?", None),
    ("witness", "Dr Patel", "Published studies associate ENDS flavours with youth appeal.", "harmful"),
    ("witness", "Dr Patel", "Our survey suggests vapers quit at higher rates.", "helpful"),
    ("witness", "Dr Patel", "Research on electronic cigarettes continues this year.", "neither"),
    ("witness", "Dr Patel", "Thank you for the invitation today.", None),
)


def build_mini_corpus():
    au_text = " ".join(text for text, _ in MINI_AU_SENTENCES) + "\n"
    uk_raw = "\n".join(f"{role}\t{speaker}\t{utterance}" for role, speaker, utterance, _ in MINI_UK_TURNS) + "\n"
    truth = []
    for index, (text, label) in enumerate(MINI_AU_SENTENCES):
        if label:
            truth.append({"sentence_id": f"mini_au#{index}", "doc_id": "mini_au", "text": text, "label": label})
    witness = [(u, lab) for role, _, u, lab in MINI_UK_TURNS if role == "witness"]
    for index, (text, label) in enumerate(witness):
        if label:
            truth.append({"sentence_id": f"mini_uk#{index}", "doc_id": "mini_uk", "text": text, "label": label})
    manifest = (
        "id,country,corpus_kind,org_name,org_category,source_path\n"
        "mini_au,AU,ERKU,Review Secretariat,government,mini_au.txt\n"
        "mini_uk,UK,INQUIRY_TRANSCRIPT,Evidence Panel,research_group,mini_uk.txt\n"
    )
    responses = [
        {
            "sentence_text": row["text"],
            "response_text": f"Reasoning: mini case. Answer: {row['label']}",
        }
        for row in truth
    ]
    return au_text, uk_raw, manifest, truth, responses


MINI_CONF = """# Small corpus for exercising the annotation service end to end.
manifest_path = manifest.csv
work_dir = work
backend = scripted
scripted_fixture_path = responses.jsonl
annotation_sample_size = 10
seed = 11
concurrency_limit = 2
"""

PIPELINE_CONF = """# Full fixture corpus; override work_dir per run.
manifest_path = corpus/manifest.csv
work_dir = work
backend = scripted
scripted_fixture_path = scripted_responses.jsonl
annotation_sample_size = 200
seed = 0
concurrency_limit = 4
"""


# --- generation-time gates ----------------------------------------------------

def make_document(doc_id: str, kind: CorpusKind, country: Country, raw: str) -> Document:
    meta = DocumentMeta(
        id=doc_id,
        country=country,
        corpus_kind=kind,
        org_name="gate",
        org_category=OrgCategory.OTHER,
        source_path=f"{doc_id}.txt",
    )
    if kind is CorpusKind.INQUIRY_TRANSCRIPT:
        raw = extract_witness_text(parse_transcript_turns(raw))
    return Document(meta=meta, text=canonicalize(raw))


def gate_main_corpus(docs, truth_rows, responses):
    by_doc: dict[str, list[dict]] = {}
    for row in truth_rows:
        by_doc.setdefault(row["doc_id"], []).append(row)
    for doc in docs:
        built = make_document(doc["doc_id"], doc["kind"], doc["country"], doc["raw"])
        if built.text != doc["canonical"]:
            raise AssertionError(f"{doc['doc_id']}: canonicalized text diverges from plan")
        segmented = segment(built)
        planned = [text for text, _ in doc["elements"]]
        got = [s.text for s in segmented]
        if got != planned:
            for i, (a, b) in enumerate(zip(planned, got)):
                if a != b:
                    raise AssertionError(f"{doc['doc_id']}[{i}]: planned {a!r} segmented {b!r}")
            raise AssertionError(f"{doc['doc_id']}: {len(planned)} planned vs {len(got)} segmented")
        retained = {f"{doc['doc_id']}#{s.index}" for s in segmented if is_evidence(s)}
        expected = {row["sentence_id"] for row in by_doc.get(doc["doc_id"], [])}
        if retained != expected:
            raise AssertionError(
                f"{doc['doc_id']}: filter mismatch, extra={sorted(retained - expected)[:3]}, "
                f"missing={sorted(expected - retained)[:3]}"
            )
    texts = [row["text"] for row in truth_rows]
    if len(set(texts)) != len(texts):
        raise AssertionError("evidence sentence texts are not unique")
    if len(texts) != 2152:
        raise AssertionError(f"corpus has {len(texts)} evidence sentences, wanted 2152")
    scripted = {r["sentence_text"] for r in responses}
    if scripted != set(texts):
        raise AssertionError("scripted responses do not cover the evidence set exactly")


def gate_cell_counts(truth_rows):
    counts: dict[tuple[str, str], dict[str, int]] = {}
    doc_cell = {doc_id: (kind.value, country.value) for doc_id, kind, country, *_ in CELLS}
    for row in truth_rows:
        cell = doc_cell[row["doc_id"]]
        bucket = counts.setdefault(cell, {"helpful": 0, "harmful": 0, "neither": 0})
        bucket[row["label"]] += 1
    for doc_id, kind, country, n_help, n_harm, n_neither, *_ in CELLS:
        got = counts[(kind.value, country.value)]
        want = {"helpful": n_help, "harmful": n_harm, "neither": n_neither}
        if got != want:
            raise AssertionError(f"{doc_id}: cell counts {got} != plan {want}")


def gate_segmentation_gold(gold):
    meta = DocumentMeta(
        id=gold["doc_id"],
        country=Country.AU,
        corpus_kind=CorpusKind.ERKU,
        org_name="gate",
        org_category=OrgCategory.OTHER,
        source_path="gold.txt",
    )
    segmented = segment(Document(meta=meta, text=gold["text"]))
    got = [{"index": s.index, "text": s.text, "start": s.start, "end": s.end} for s in segmented]
    if got != gold["sentences"]:
        for a, b in zip(gold["sentences"], got):
            if a != b:
                raise AssertionError(f"gold mismatch: planned {a} segmented {b}")
        raise AssertionError(f"gold sentence count {len(got)} != {len(gold['sentences'])}")


def gate_adversarial(rows):
    for row in rows:
        try:
            _, label = parse_response(row["response_text"])
            got: str | None = label.value
        except Exception:
            got = None
        if got != row["expected_label"]:
            raise AssertionError(
                f"adversarial case {row['note']!r}: parses to {got}, expected {row['expected_label']}"
            )


def gate_mini(au_text, uk_raw, truth, responses):
    docs = [
        ("mini_au", CorpusKind.ERKU, Country.AU, au_text),
        ("mini_uk", CorpusKind.INQUIRY_TRANSCRIPT, Country.UK, uk_raw),
    ]
    expected = {row["sentence_id"]: row for row in truth}
    retained = {}
    for doc_id, kind, country, raw in docs:
        built = make_document(doc_id, kind, country, raw)
        for s in segment(built):
            if is_evidence(s):
                retained[f"{doc_id}#{s.index}"] = s.text
    if set(retained) != set(expected):
        raise AssertionError(f"mini filter mismatch: {sorted(set(retained) ^ set(expected))}")
    for sid, text in retained.items():
        if expected[sid]["text"] != text:
            raise AssertionError(f"mini {sid}: text drift")
    if len(truth) != len(responses):
        raise AssertionError("mini responses do not cover evidence truth")


def golden_prompt_bytes() -> bytes:
    """Template with the slot spliced out by index arithmetic, not render_prompt."""
    template = prompt_template()
    at = template.index(SLOT)
    sentence = ANCHORS[("erku_uk", "helpful")]
    return (template[:at] + sentence + template[at + len(SLOT) :]).encode("utf-8")


def build_all() -> dict[str, bytes]:
    docs = build_main_corpus()
    truth_rows = evidence_truth(docs)
    responses = scripted_responses(truth_rows)
    gate_main_corpus(docs, truth_rows, responses)
    gate_cell_counts(truth_rows)
    records = records_rows(truth_rows, responses)

    gold = build_segmentation_gold()
    gate_segmentation_gold(gold)

    adversarial = adversarial_rows()
    gate_adversarial(adversarial)

    au_text, uk_raw, mini_manifest, mini_truth, mini_responses = build_mini_corpus()
    gate_mini(au_text, uk_raw, mini_truth, mini_responses)

    def jsonl(rows) -> bytes:
        return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows).encode("utf-8")

    cell_counts = {
        f"{kind.value}|{country.value}": {
            "evidence": h + m + n, "helpful": h, "harmful": m, "neither": n,
        }
        for _, kind, country, h, m, n, *_ in CELLS
    }
    anchor_ids = {}
    for row in truth_rows:
        for (doc_id, label), text in ANCHORS.items():
            if row["doc_id"] == doc_id and row["text"] == text:
                anchor_ids[label] = {"sentence_id": row["sentence_id"], "text": text}
    if len(anchor_ids) != 3:
        raise AssertionError("anchor sentences missing from evidence truth")

    expected_json = {
        "cell_counts": cell_counts,
        "anchors": anchor_ids,
        "evidence": truth_rows,
    }

    files: dict[str, bytes] = {
        "corpus/manifest.csv": manifest_csv(docs).encode("utf-8"),
        "scripted_responses.jsonl": jsonl(responses),
        "records.jsonl": jsonl(records),
        "expected/evidence_expected.json": (
            json.dumps(expected_json, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
        ).encode("utf-8"),
        "expected/breakdown.csv": (CSV_HEADER + "\n" + "\n".join(EXPECTED_BREAKDOWN_ROWS) + "\n").encode("utf-8"),
        "segmentation_gold.json": (
            json.dumps(gold, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
        ).encode("utf-8"),
        "adversarial_responses.jsonl": jsonl(adversarial),
        "golden_prompt.txt": golden_prompt_bytes(),
        "pipeline.conf": PIPELINE_CONF.encode("utf-8"),
        "mini/manifest.csv": mini_manifest.encode("utf-8"),
        "mini/mini_au.txt": au_text.encode("utf-8"),
        "mini/mini_uk.txt": uk_raw.encode("utf-8"),
        "mini/responses.jsonl": jsonl(mini_responses),
        "mini/mini.conf": MINI_CONF.encode("utf-8"),
    }
    for doc in docs:
        files[f"corpus/{doc['source']}"] = doc["raw"].encode("utf-8")
    return files


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "fixtures"))
    parser.add_argument("--check", action="store_true", help="verify fixtures on disk match the plan")
    args = parser.parse_args(argv)

    files = build_all()
    root = Path(args.out)
    if args.check:
        stale = []
        for rel, payload in files.items():
            path = root / rel
            if not path.is_file() or path.read_bytes() != payload:
                stale.append(rel)
        if stale:
            print(f"stale fixtures: {', '.join(stale)}", file=sys.stderr)
            return 1
        print(f"{len(files)} fixture files match the plan")
        return 0
    for rel, payload in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    print(f"wrote {len(files)} fixture files under {root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
