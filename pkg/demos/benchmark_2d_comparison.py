"""Compare constrained sampling algorithms on the two-mode benchmark.

A two-component Gaussian mixture at (-2, 0) and (2, 0) is sampled subject to
the halfspace x <= -1, which removes the right mode entirely and cuts through
the transport paths of the left one. Four algorithms run on identical seeds:

  vanilla    unconstrained flow (baseline; roughly half the batch infeasible)
  repeated   project every intermediate state onto the terminal set
  eci        restart-from-noise alternation with a terminal projection
  ccfm       chance-constrained tightening with a final exact refinement

The table reports terminal feasibility, sliced Wasserstein-2 distance to a
rejection-sampled reference (the target conditioned on feasibility), and the
mean total projection movement per trajectory. Repeated projection drags
mid-flight states onto a set they should only reach at t = 1 and then fights
the velocity field; the tightened boundary moves with the transport map, so
it corrects far less and lands closer to the conditioned target.

Run:  python3 demos/benchmark_2d_comparison.py [--seed N] [--samples N]
      [--out-dir DIR]   (writes trajectory figures per algorithm if given)
"""

import argparse
import pathlib

import numpy as np

from chanceflow import (ConstraintSet, FlowModel, GaussianMixtureTarget,
                        LinearIneq, SamplerConfig, Scheduler,
                        feasibility_report, rejection_sample, run_batch,
                        stream_rng)
from chanceflow.config import DIRECTION_STREAM, REFERENCE_STREAM
from chanceflow.figures import emit_figure

ALGORITHMS = ("vanilla", "repeated", "eci", "ccfm")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--samples", type=int, default=200)
    parser.add_argument("--steps", type=int, default=100)
    parser.add_argument("--out-dir", type=pathlib.Path, default=None)
    args = parser.parse_args()

    target = GaussianMixtureTarget(np.array([[-2.0, 0.0], [2.0, 0.0]]), 0.4)
    model = FlowModel(target)
    cs = ConstraintSet((LinearIneq(np.array([1.0, 0.0]), -1.0),))
    reference = rejection_sample(target, cs, 512,
                                 stream_rng(args.seed, REFERENCE_STREAM))

    print(f"seed {args.seed}, {args.samples} samples, {args.steps} steps, "
          f"reference batch 512 (rejection)\n")
    print("algorithm   feasible   sliced-W2   mean projection move")
    print("-" * 55)
    for algorithm in ALGORITHMS:
        cfg = SamplerConfig(algorithm=algorithm, n_steps=args.steps,
                            seed=args.seed, samples=args.samples,
                            scheduler=Scheduler(0.5))
        records = run_batch(model, cs if algorithm != "vanilla" else None, cfg)
        report = feasibility_report(records, cs, reference,
                                    rng=stream_rng(args.seed, DIRECTION_STREAM))
        print(f"{algorithm:<10} {report.feasibility_rate:8.1%}   "
              f"{report.sliced_w2:9.4f}   {report.mean_projection_move:9.4f}")
        if args.out_dir is not None:
            args.out_dir.mkdir(parents=True, exist_ok=True)
            path = args.out_dir / f"benchmark_{algorithm}_trajectory.svg"
            emit_figure(records[:8], "trajectory_2d", path)
            print(f"           wrote {path}")

    print("\nvanilla shows the unconstrained feasibility rate of the target;")
    print("the constrained rows all reach 100% but differ in how much they")
    print("bend the flow to get there.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
