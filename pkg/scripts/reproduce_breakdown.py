"""Rebuild the headline breakdown table from the shipped record fixture.

Loads fixtures/records.jsonl and fixtures/corpus/manifest.csv, aggregates,
and prints the text table plus the chi-square line. No pipeline work dir is
needed; sentence ids carry their document id.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from stancelab.classifier import record_from_json
from stancelab.corpus import load_manifest
from stancelab.report import aggregate, render


def main(argv=None) -> int:
    root = Path(__file__).resolve().parent.parent / "fixtures"
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--records", default=str(root / "records.jsonl"))
    parser.add_argument("--manifest", default=str(root / "corpus" / "manifest.csv"))
    args = parser.parse_args(argv)

    started = time.perf_counter()
    with open(args.records, encoding="utf-8") as fh:
        records = [record_from_json(json.loads(line)) for line in fh]
    metas = load_manifest(args.manifest)
    index = {r.sentence_id: r.sentence_id.rsplit("#", 1)[0] for r in records}
    breakdown = aggregate(records, metas, index)
    elapsed = time.perf_counter() - started

    sys.stdout.write(render(breakdown, "text").decode("utf-8"))
    print(f"\n{len(records)} records aggregated in {elapsed:.3f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
