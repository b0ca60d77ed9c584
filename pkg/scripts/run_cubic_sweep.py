"""Cubic gate: mean fidelity against ancilla squeezing, written as CSV + summary."""
import argparse
from pathlib import Path

from nlphase.cli import load_config, simulate

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=ROOT / "configs" / "cubic_default.json")
    ap.add_argument("--out", default=ROOT / "runs" / "cubic")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    summary = simulate(load_config(args.config), Path(args.out), args.threads)
    for p in summary["points"]:
        print(f"{p['squeezing_db']:5.1f} dB  F = {p['mean_fidelity']:.6f}  "
              f"[{p['ci95'][0]:.6f}, {p['ci95'][1]:.6f}]")


if __name__ == "__main__":
    main()
