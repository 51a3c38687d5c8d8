"""Show how the probability schedule controls when corrections start.

The tightening schedule phi(t) = (t/2)**n sets the probability with which
each intermediate state must already satisfy the terminal constraint. Small
t makes the required probability tiny, so the surrogate boundary sits far
outside the data and projections are no-ops; larger exponents extend that
hands-off window. This script runs the chance-constrained sampler on the
two-mode benchmark for several exponents and prints, per schedule, when the
first correction lands and how the per-step movement is distributed over
time, alongside the terminal distortion.

Run:  python3 demos/scheduler_early_freedom.py [--seed N] [--samples N]
"""

import argparse

import numpy as np

from chanceflow import (ConstraintSet, FlowModel, GaussianMixtureTarget,
                        LinearIneq, SamplerConfig, Scheduler,
                        feasibility_report, rejection_sample, run_batch,
                        stream_rng)
from chanceflow.config import DIRECTION_STREAM, REFERENCE_STREAM

BARS = " .:-=+*#%@"


def movement_profile(records, n_bins: int = 20) -> np.ndarray:
    """Mean projection movement pooled into time bins, over the batch."""
    moves = np.stack([r.projection_moves for r in records])
    edges = np.linspace(0, moves.shape[1], n_bins + 1).astype(int)
    return np.array([moves[:, lo:hi].mean() for lo, hi in zip(edges, edges[1:])])


def sparkline(values: np.ndarray) -> str:
    top = float(values.max())
    if top <= 0.0:
        return BARS[0] * len(values)
    idx = np.minimum((values / top * (len(BARS) - 1)).astype(int), len(BARS) - 1)
    return "".join(BARS[i] for i in idx)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--samples", type=int, default=200)
    parser.add_argument("--steps", type=int, default=100)
    args = parser.parse_args()

    target = GaussianMixtureTarget(np.array([[-2.0, 0.0], [2.0, 0.0]]), 0.4)
    model = FlowModel(target)
    cs = ConstraintSet((LinearIneq(np.array([1.0, 0.0]), -1.0),))
    reference = rejection_sample(target, cs, 512,
                                 stream_rng(args.seed, REFERENCE_STREAM))

    print(f"movement over time (t from 0 to 1, {args.steps} steps, "
          f"{args.samples} samples)\n")
    print("   n   first move   untouched steps   movement profile       sliced-W2")
    print("-" * 78)
    for n in (0.25, 0.5, 1.0, 2.0, 4.0):
        cfg = SamplerConfig(algorithm="ccfm", n_steps=args.steps,
                            seed=args.seed, samples=args.samples,
                            scheduler=Scheduler(n))
        records = run_batch(model, cs, cfg)
        report = feasibility_report(records, cs, reference,
                                    rng=stream_rng(args.seed, DIRECTION_STREAM))
        moves = np.stack([r.projection_moves for r in records])
        any_move = moves.max(axis=0) > 0.0
        first = int(np.argmax(any_move)) if any_move.any() else args.steps
        quiet = int(np.sum(~any_move))
        print(f"  {n:4.2f}   step {first:>3}    {quiet:>5} of {args.steps}"
              f"      |{sparkline(movement_profile(records))}|   "
              f"{report.sliced_w2:8.4f}")

    print("\nslow schedules (large n) leave the whole early flow untouched and")
    print("concentrate the work near t = 1, where a late catch costs accuracy;")
    print("fast ones intervene early. The default n = 0.5 starts gently once")
    print("the transport direction is resolved and spreads the correction out.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
