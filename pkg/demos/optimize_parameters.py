"""Reproduce the shipped tracker defaults with the cross-validated grid
search.

Builds a five-recording corpus of single sleep cycles, then runs the
default parameter grid for each algorithm with 5-fold cross-validation.
The winning combos should match (or sit next to) the package defaults.
Expect a few minutes of wall time; the vocoder grid is the big one.
"""
import argparse
import time

from swphase import (SynthSpec, TrackerConfig, generate, grid_search_cv,
                     make_pipeline_evaluator)
from swphase.optimize import default_grid
from swphase.synth import default_hypnogram
from swphase.trackers import DEFAULT_TARGET_DEG

SHIPPED = {
    "at": {"at_threshold_uv": TrackerConfig(algorithm="at").at_threshold_uv},
    "pll": {"phi_target_deg": DEFAULT_TARGET_DEG["pll"],
            "k_pll": TrackerConfig(algorithm="pll").k_pll},
    "pv": {"phi_target_deg": DEFAULT_TARGET_DEG["pv"],
           "k_pv": TrackerConfig(algorithm="pv").k_pv,
           "maf_span": TrackerConfig(algorithm="pv").maf_span},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--algorithm", choices=("at", "pll", "pv"),
                    help="run one grid instead of all three")
    ap.add_argument("--recordings", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"generating {args.recordings} one-cycle recordings...")
    recordings = [generate(SynthSpec(hypnogram=default_hypnogram(1),
                                     seed=100 + i)).recording
                  for i in range(args.recordings)]

    for algo in (args.algorithm,) if args.algorithm else ("at", "pll", "pv"):
        grid = default_grid(algo)
        n_combos = 1
        for vals in grid.values():
            n_combos *= len(vals)
        k = min(5, len(recordings))
        print(f"\n{algo}: {n_combos} combos, {k}-fold CV, seed {args.seed}")
        t0 = time.perf_counter()
        evaluate = make_pipeline_evaluator(recordings, algo)
        outcome = grid_search_cv(recordings, grid, evaluate, k=k,
                                 seed=args.seed)
        dt = time.perf_counter() - t0
        ranked = sorted(outcome.results, key=lambda r: (r.ed_error,
                                                        r.mean_val_ed))
        print(f"  searched in {dt:.0f} s; top of the table:")
        for r in ranked[:3]:
            print(f"    ed_error={r.ed_error:.4f} val={r.mean_val_ed:.4f} "
                  f"{r.combo}")
        print(f"  shipped default: {SHIPPED[algo]}")


if __name__ == "__main__":
    main()
