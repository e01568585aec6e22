"""Run the data stages on ``data/raw`` and write ``data/expected_values.json``.

Run once after ``fetch_data.py``; commit both the raw files and the output.
Floats are stored with ``repr`` precision so the acceptance suite can
compare them bit for bit.
"""
from __future__ import annotations

import json
import tempfile
from pathlib import Path

from logheston import cli, report
from logheston.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        cfg = load_config(None, base_dir=str(ROOT), out=tmp)
        cli.run_ingest(cfg)
        cli.run_diagnose(cfg)
        cli.run_fit(cfg)
        cli.run_hill(cfg)
        docs, _ = report.load_stage_outputs(tmp)
    snapshot = json.loads((ROOT / "data" / "raw" / "SNAPSHOT.json").read_text())
    doc = {"snapshot": snapshot, "values": report.snapshot_values(docs)}
    path = ROOT / "data" / "expected_values.json"
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(doc['values'])} values to {path}")


if __name__ == "__main__":
    main()
