"""Run every shipped config (except the invalid example) and write a summary."""

import argparse
import sys
from pathlib import Path

from pencil_lab.cli import main

ROOT = Path(__file__).resolve().parents[1]


def cli():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT / "runs"))
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    codes = {}
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        if cfg.name.startswith("invalid"):
            continue
        print(f"== {cfg.name}", flush=True)
        codes[cfg.name] = main(["run", str(cfg), "--out", args.out, "--jobs", str(args.jobs)])
    main(["report", args.out])
    for name, code in codes.items():
        print(f"{code}  {name}")
    return max(codes.values(), default=0)


if __name__ == "__main__":
    sys.exit(cli())
