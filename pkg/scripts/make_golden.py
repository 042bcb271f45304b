"""Regenerate tests/golden/* from the fixed definitions in tests/golden_models.py.

Run through ``make golden`` only; the golden tests exist to catch silent
format drift, so regenerate deliberately and review the diff.
"""
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from edgeaf.bonsai import save_model  # noqa: E402
from edgeaf.ingest import EcgRecord, save_csv  # noqa: E402
from golden_models import tiny_model  # noqa: E402

OUT = ROOT / "tests" / "golden"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    save_model(tiny_model(), OUT / "tiny.bnsi")
    rec = EcgRecord("tiny", [0.1, 0.25, -0.05, 1.0, 0.3], 250, [0, 0, 1, 1, 1],
                    rpeaks_truth=[3])
    save_csv(rec, OUT / "tiny.csv")
    for p in sorted(OUT.iterdir()):
        print(f"{p.relative_to(ROOT)}  {p.stat().st_size} bytes")


if __name__ == "__main__":
    main()
