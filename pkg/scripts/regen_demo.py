"""Re-record the demo fixtures and regenerate the golden files.

Only needed when the prompt templates, the mock backend or the pipeline
change in a way that alters outputs. Usage: python3 scripts/regen_demo.py
"""

import shutil
import tempfile
from pathlib import Path

from reasongraph.cli import DEMO_DIR, main

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden"


def record_fixtures() -> None:
    fixtures = DEMO_DIR / "fixtures"
    shutil.rmtree(fixtures, ignore_errors=True)
    with tempfile.TemporaryDirectory() as tmp:
        code = main([
            "build-graph", str(DEMO_DIR / "corpus.jsonl"),
            "--config", str(DEMO_DIR / "config.yaml"),
            "--backend", "mock", "--record", str(fixtures), "--out", tmp,
        ])
    assert code == 0, "recording run failed"


def write_goldens() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        assert main(["demo", "--out", tmp]) == 0, "demo run failed"
        shutil.rmtree(GOLDEN, ignore_errors=True)
        (GOLDEN / "graphs").mkdir(parents=True)
        for path in sorted((Path(tmp) / "graphs").iterdir()):
            shutil.copy(path, GOLDEN / "graphs" / path.name)
        shutil.copy(Path(tmp) / "metrics.csv", GOLDEN / "metrics.csv")
        shutil.copy(Path(tmp) / "report" / "report.md", GOLDEN / "report.md")


if __name__ == "__main__":
    record_fixtures()
    write_goldens()
    print(f"fixtures -> {DEMO_DIR / 'fixtures'}, goldens -> {GOLDEN}")
