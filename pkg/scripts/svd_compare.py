#!/usr/bin/env python3
"""Compare the closed-form rank-2 student against the iterative fit.

Both students compress the same synthetic teacher; prints teacher agreement
and the distillation objective for each, plus the factorization residual.
"""

import argparse

import numpy as np

import distillmap as dm


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--classes", type=int, default=10)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=600)
    args = ap.parse_args()

    table = dm.synth_teacher(args.classes, args.n, seed=args.seed)

    svd = dm.fit_svd(table.effective_logits())
    svd_agree = dm.teacher_agreement(svd, table.effective_logits())
    rel_residual = svd.residual / np.linalg.norm(table.effective_logits())
    print(f"closed-form: teacher agreement {svd_agree:.4f}, "
          f"relative residual {rel_residual:.4f}, "
          f"singular values {svd.singular_values.round(2)}")

    cfg = dm.TrainConfig(epochs=args.epochs, seed=args.seed, deterministic=True)
    emb, params, _ = dm.train(table, cfg)
    kl, _, acc = dm.compression_quality(table, emb, params)
    print(f"iterative:   teacher agreement {acc:.4f}, sym-KL {kl:.4f}")

    m1_svd = _svd_local_fidelity(svd, k=5)
    m1_fit = dm.local_fidelity(emb, params, k=5)
    print(f"local fidelity (k=5): closed-form {m1_svd:.4f}, iterative {m1_fit:.4f}")


def _svd_local_fidelity(model: dm.SvdModel, k: int) -> float:
    # same M_k metric, evaluated on the softmax student's posteriors
    pts = model.embed
    n = pts.shape[0]
    logits = np.einsum("ij,jk->ik", pts, model.weights)
    shift = logits - logits.max(axis=1, keepdims=True)
    posts = np.exp(shift)
    posts /= posts.sum(axis=1, keepdims=True)
    total = 0.0
    block = max(1, int(4e6) // n)
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        d2 = np.sum((pts[lo:hi, None, :] - pts[None, :, :]) ** 2, axis=2)
        d2[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        nbrs = np.argsort(d2, axis=1, kind="stable")[:, :k]
        for row, i in enumerate(range(lo, hi)):
            for j in nbrs[row]:
                total += dm.jsd(posts[i], posts[j])
    return total / (n * k)


if __name__ == "__main__":
    main()
