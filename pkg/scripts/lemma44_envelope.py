"""Monte-Carlo sweep of the entropy defect against the dependence of joint laws.

    python3 scripts/lemma44_envelope.py --draws 1000 --size 4 --seed 0
"""

import argparse

import numpy as np

from qfe.cnt import dependence, independence_envelope, lemma44_check


def near_independent(rng, size, target):
    p = rng.dirichlet(np.ones(size))
    q = rng.dirichlet(np.ones(size))
    r = rng.dirichlet(np.ones(size * size)).reshape(size, size)
    t = rng.uniform(0.0, 1.0)
    while True:
        joint = (1.0 - t) * np.outer(p, q) + t * r
        if dependence(joint) <= target:
            return joint / joint.sum()
        t *= 0.5


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--draws", type=int, default=1000)
    parser.add_argument("--size", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--deltas", type=float, nargs="+", default=[1e-4, 1e-3, 1e-2, 5e-2])
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'delta':>8} {'max defect':>12} {'median':>12} {'envelope':>10}")
    for delta in args.deltas:
        defects = [lemma44_check(near_independent(rng, args.size, delta), delta, 1.0).defect for _ in range(args.draws)]
        env = independence_envelope(delta, args.size)
        print(f"{delta:>8.0e} {max(defects):>12.3e} {np.median(defects):>12.3e} {env:>10.3e}")


if __name__ == "__main__":
    main()
