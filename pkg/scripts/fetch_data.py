"""Download the raw VIX/VXO and size-portfolio return files into ``data/raw``.

Writes the files named in the default run configuration plus
``data/raw/SNAPSHOT.json`` with the retrieval date and SHA-256 of each file.

    python3 scripts/fetch_data.py [--dest data/raw]
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import io
import json
import urllib.request
import zipfile
from pathlib import Path

FRED = "https://fred.stlouisfed.org/graph/fredgraph.csv?id={}"
FRENCH = "https://mba.tuck.dartmouth.edu/pages/faculty/ken.french/ftp/{}"
PORTFOLIO_FILES = {
    "total": "Portfolios_Formed_on_ME_CSV.zip",
    "price": "Portfolios_Formed_on_ME_Wout_Div_CSV.zip",
}
# Top 30% by capitalization is "large", middle 40% is "small"
COLUMNS = {"large": "Hi 30", "small": "Med 40"}
FIRST_MONTH, LAST_MONTH = "198601", "202406"


def _get(url: str) -> bytes:
    req = urllib.request.Request(url, headers={"User-Agent": "logheston-fetch"})
    with urllib.request.urlopen(req, timeout=60) as resp:
        return resp.read()


def _value_weighted_monthly(text: str) -> list[dict]:
    """First table of a French portfolio file: value-weighted monthly returns."""
    rows = list(csv.reader(io.StringIO(text)))
    start = next(i for i, r in enumerate(rows) if r and r[0] == "" and "Lo 30" in [c.strip() for c in r])
    header = [c.strip() for c in rows[start]]
    out = []
    for r in rows[start + 1:]:
        if not r or not r[0].strip().isdigit() or len(r[0].strip()) != 6:
            break
        out.append(dict(zip(header, (c.strip() for c in r))) | {"month": r[0].strip()})
    return out


def _write_returns(dest: Path, name: str, table: list[dict], column: str) -> Path:
    path = dest / f"{name}.csv"
    lines = ["Date,Return"]
    lines += [f"{row['month']},{row[column]}" for row in table if FIRST_MONTH <= row["month"] <= LAST_MONTH]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def fetch(dest: Path) -> dict:
    dest.mkdir(parents=True, exist_ok=True)
    written = []
    for code in ("VXOCLS", "VIXCLS"):
        path = dest / f"{code.lower()}.csv"
        path.write_bytes(_get(FRED.format(code)))
        written.append(path)
    for kind, filename in PORTFOLIO_FILES.items():
        with zipfile.ZipFile(io.BytesIO(_get(FRENCH.format(filename)))) as zf:
            text = zf.read(zf.namelist()[0]).decode("latin-1")
        table = _value_weighted_monthly(text)
        for size, column in COLUMNS.items():
            written.append(_write_returns(dest, f"{size}_{kind}", table, column))
    manifest = {
        "retrieved": dt.date.today().isoformat(),
        "window": [FIRST_MONTH, LAST_MONTH],
        "files": {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in written},
    }
    (dest / "SNAPSHOT.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dest", type=Path, default=Path(__file__).resolve().parents[1] / "data" / "raw")
    args = parser.parse_args()
    manifest = fetch(args.dest)
    for name, digest in manifest["files"].items():
        print(f"{name}  {digest[:12]}")


if __name__ == "__main__":
    main()
