#!/usr/bin/env python3
"""Regenerate the golden frame digests for the reference determinism job.

Run after an intentional rendering change, then commit the updated file:

    python scripts/regen_golden.py
"""

import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from test_acceptance import GOLDEN_PATH, _run_reference_job  # noqa: E402


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        manifest = _run_reference_job(Path(tmp) / "golden")
    GOLDEN_PATH.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN_PATH.write_text(
        json.dumps(
            {
                "job": "grid net, 10 vehicles, 5 s window, seed 0, 320x180",
                "frame_count": manifest["frame_count"],
                "frame_digests": manifest["frame_digests"],
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"wrote {GOLDEN_PATH} ({manifest['frame_count']} frames)")


if __name__ == "__main__":
    main()
