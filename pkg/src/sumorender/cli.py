"""Command-line interface: render, export and info verbs.

Exit codes: 0 success, 1 config error, 2 input parse/validation error,
3 render failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError, ParseError, RenderError, ValidationError
from .pipeline import export_bundle, info_summary, render_sequence


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sumorender",
        description="Batch 3D rendering of SUMO simulation outputs.",
    )
    parser.add_argument("--config", required=True, help="YAML job configuration")
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("render", help="render the configured frame sequence")
    sub.add_parser("export", help="export the scene bundle for the viewer")
    sub.add_parser("info", help="print statistics about the configured inputs")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config_text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        job = load_config(config_text)
        if args.verb == "render":
            manifest = render_sequence(job)
            print(
                f"rendered {manifest['frames_written']}/{manifest['frame_count']} frames "
                f"to {job.frames_dir} in {manifest['timings_s']['wall']} s"
            )
            if manifest["skipped_frames"]:
                print(f"skipped {len(manifest['skipped_frames'])} frames (see manifest)")
        elif args.verb == "export":
            manifest = export_bundle(job)
            print(
                f"exported bundle to {job.bundle_path} "
                f"({manifest['buffer']['byte_length']} bytes, "
                f"{len(manifest['tracks'])} tracks)"
            )
        else:
            print(json.dumps(info_summary(job), indent=2))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, ValidationError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except RenderError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
