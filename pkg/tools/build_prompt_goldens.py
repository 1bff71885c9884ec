#!/usr/bin/env python3
"""Regenerate the golden rendered prompts under tests/golden/.

The goldens freeze the full rendered text of every template (all five
methods plus each agent role) under fixed sample bindings. The acceptance
suite re-renders and compares byte-for-byte, then independently checks the
anchor sentences, so editing a prompt asset requires consciously rebuilding
these files.
"""

from __future__ import annotations

import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from stocheval.pipeline import category_instructions, load_templates, render, starter_code

GOLDEN_DIR = REPO / "tests" / "golden"

SAMPLE_BINDINGS = {
    "problem_description": "You must decide how many units to stock at two depots "
    "before uncertain demand is revealed.",
    "code_example": starter_code(),
    "instructions": category_instructions("SLP-2"),
    "extraction_output": "sets: depots; parameters: demand distribution; "
    "variables: stock levels (first stage), shipments (second stage)",
    "current_code": "model = build_model(depots, demand)",
    "reviewers_feedback": "Reviewer 1: check the demand constraint right-hand side.",
}


def main() -> int:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    for old in GOLDEN_DIR.glob("*.txt"):
        old.unlink()
    for tid, template in sorted(load_templates().items()):
        text = render(template, SAMPLE_BINDINGS)
        (GOLDEN_DIR / f"{tid}.txt").write_text(text)
        print(f"wrote golden {tid}.txt ({len(text)} chars)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
