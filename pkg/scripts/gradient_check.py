"""Central finite-difference check of the hand-written MLP gradients."""
import argparse

import numpy as np

from anomrank.datagen import RadLawParams, compute_rad, dilate, make_train_set, sample_gaussian, sample_radlaw
from anomrank.model import MlpScorer, bce_grad, bce_loss, forward, mlp_new, regularized_grad, regularized_loss
from anomrank.scoregen import parse_phi


def fd(f, v, h):
    g = np.empty_like(v)
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = h
        g[i] = (f(v + e) - f(v - e)) / (2 * h)
    return g


def rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", type=int, default=100)
    ap.add_argument("--step", type=float, default=1e-5)
    ap.add_argument("--phi", default="mww")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    phi = parse_phi(args.phi)
    rng = np.random.default_rng(args.seed)
    errs_bce, errs_reg = [], []
    while len(errs_bce) < args.configs:
        d = int(rng.integers(1, 5))
        model = mlp_new(d, rng)
        model.b1 = rng.normal(0, 0.3, model.hidden_size)
        x = sample_gaussian(12, d, 0.1, rng)
        pool = make_train_set(x, dilate(sample_radlaw(8, d, RadLawParams(3, 1), rng), compute_rad(x) + 0.01))
        if np.min(np.abs(pool.points @ model.w1.T + model.b1)) < 1e-4:
            continue
        lam = float(rng.choice([0.01, 0.1, 1.0, 10.0]))
        xi, yi = pool.points[0], int(rng.integers(0, 2))
        errs_bce.append(rel(bce_grad(model, xi, yi).params(),
                            fd(lambda v: bce_loss(forward(MlpScorer.from_params(v, d), xi), yi), model.params(), args.step)))
        errs_reg.append(rel(regularized_grad(model, pool, lam, phi).params(),
                            fd(lambda v: regularized_loss(MlpScorer.from_params(v, d), pool, lam, phi), model.params(), args.step)))

    for name, e in (("bce", errs_bce), ("regularized", errs_reg)):
        print(f"{name:>12}: max rel err {max(e):.2e}, median {np.median(e):.2e} over {len(e)} configs")


if __name__ == "__main__":
    main()
