#!/usr/bin/env python3
"""Regenerate the reference figure datasets through the CLI.

Thin wrapper over `rotwave reproduce`; each target writes CSV/JSON data
(no plotting dependencies) into its own subdirectory.

Usage:
    python3 scripts/reproduce_figures.py [--out out/figures] [fig1 fig2 ...]
"""

import argparse
import sys

from rotwave.cli import main as cli_main

TARGETS = ["fig1", "fig2", "fig4", "fig5"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/figures")
    ap.add_argument("targets", nargs="*", default=TARGETS,
                    help=f"subset of {TARGETS}")
    args = ap.parse_args()

    rc = 0
    for target in args.targets or TARGETS:
        if target not in TARGETS:
            raise SystemExit(f"unknown target {target!r}; pick from {TARGETS}")
        print(f"== {target} ==")
        rc |= cli_main(["--out", args.out, "reproduce", target])
    return rc


if __name__ == "__main__":
    sys.exit(main())
