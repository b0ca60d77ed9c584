"""A/B comparison of the quartic scheme with a weakly and a strongly squeezed order-3 ancilla."""
import argparse

from nlphase import circuits
from nlphase.metrics import eq17_criterion
from nlphase.statesim import make_ancilla, required_grid


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trajectories", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--weak-db", type=float, default=5.0)
    ap.add_argument("--strong-db", type=float, default=25.0)
    args = ap.parse_args()
    base = circuits.CircuitConfig(gate="quartic", trajectories=args.trajectories, seed=args.seed)
    for label, db in (("violating", args.weak_db), ("satisfying", args.strong_db)):
        cfg = base.with_squeezing(25.0).with_squeezing(db, [3])
        a3, a4 = cfg.ancilla(3), cfg.ancilla(4)
        crit = eq17_criterion(make_ancilla(a3, required_grid(a3)), make_ancilla(a4, required_grid(a4)), a3.chi)
        recs = circuits.run_many(cfg)
        s = circuits.summarize(recs, args.seed)
        print(f"{label:10s} A3 {db:4.1f} dB  lhs/rhs margin {crit['margin']:8.3f}  "
              f"F = {s['mean_fidelity']:.6f}  95% CI [{s['ci95'][0]:.6f}, {s['ci95'][1]:.6f}]")


if __name__ == "__main__":
    main()
