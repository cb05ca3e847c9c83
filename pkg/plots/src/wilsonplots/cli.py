"""Command line entry point: wilsonmg-plot --spec <json>."""

from __future__ import annotations

import argparse
import sys

from .render import render
from .spec import load_spec


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="wilsonmg-plot", description=__doc__)
    ap.add_argument("--spec", required=True, help="JSON plot specification")
    args = ap.parse_args(argv)
    try:
        report = render(load_spec(args.spec))
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{report.out} ({report.series} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
