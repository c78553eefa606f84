#!/usr/bin/env python3
"""Monte Carlo calibration for the chain-generation thresholds frozen in the
C++ test suites (tests/acceptance.cpp and unit tests).

Mirrors the library's sampling law: Dirichlet rows via gamma draws floored at
the smallest normal double, power iteration from the uniform vector with L1
residual tolerance 1e-10 capped at 100*M iterations, entropy rate in bits.

Usage: python3 calibrate_chain.py [--fast]
"""

import argparse
import sys

import numpy as np

MIN_NORMAL = 2.2250738585072014e-308
M = 128
TARGET = 1.0
EPSILON = 0.2


def dirichlet_rows(m, alpha, rng):
    g = rng.gamma(alpha, 1.0, size=(m, m))
    g = np.maximum(g, MIN_NORMAL)
    return g / g.sum(axis=1, keepdims=True)


def stationary_batch(mats, tol=1e-10):
    """Power iteration on a (K, M, M) batch. Returns (pi, iters, converged)."""
    k, m, _ = mats.shape
    pi = np.full((k, m), 1.0 / m)
    iters = np.zeros(k, dtype=int)
    done = np.zeros(k, dtype=bool)
    max_iters = 100 * m
    for it in range(max_iters):
        if done.all():
            break
        act = ~done
        nxt = np.einsum("ki,kij->kj", pi[act], mats[act])
        resid = np.abs(nxt - pi[act]).sum(axis=1)
        pi[act] = nxt / nxt.sum(axis=1, keepdims=True)
        newly = resid <= tol
        idx = np.flatnonzero(act)
        done[idx[newly]] = True
        iters[idx[~newly]] = it + 1
    return pi, iters, done


def entropy_rate_bits(mats, pis):
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(mats > 0, mats * np.log2(mats), 0.0)
    return -(pis * plogp.sum(axis=2)).sum(axis=1)


def sample_paths(P, pi, count, length, rng):
    cum = np.cumsum(P, axis=1)
    cum_pi = np.cumsum(pi)
    states = np.empty((count, length), dtype=np.int64)
    u = rng.random(count)
    states[:, 0] = np.searchsorted(cum_pi, u, side="right").clip(0, len(pi) - 1)
    for t in range(1, length):
        rows = cum[states[:, t - 1]]
        u = rng.random(count)
        nxt = (rows < u[:, None]).sum(axis=1)
        states[:, t] = nxt.clip(0, P.shape[0] - 1)
    return states


def conditional_nll_prefix(P, states, lengths):
    """Average conditional NLL of the first n tokens, for each n in lengths."""
    step = -np.log2(P[states[:, :-1], states[:, 1:]])
    csum = np.cumsum(step, axis=1)
    return {n: csum[:, n - 2] / (n - 1) for n in lengths}


def pick_chain_near_target(alpha, rng, gap=0.02, batch=64):
    while True:
        mats = np.stack([dirichlet_rows(M, alpha, rng) for _ in range(batch)])
        pis, _, ok = stationary_batch(mats)
        hs = entropy_rate_bits(mats, pis)
        cand = np.flatnonzero(ok & (np.abs(hs - TARGET) <= gap))
        if len(cand):
            i = cand[0]
            return mats[i], pis[i], hs[i]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fast", action="store_true")
    args = ap.parse_args()
    rng = np.random.default_rng(20250809)

    grid = [0.002, 0.003, 0.005, 0.008, 0.02, 0.05]
    per_alpha = 200 if args.fast else 500

    print("== entropy distribution per alpha (M=128) ==")
    pool = {}
    for alpha in grid:
        mats = np.stack([dirichlet_rows(M, alpha, rng) for _ in range(per_alpha)])
        pis, iters, ok = stationary_batch(mats)
        hs = entropy_rate_bits(mats[ok], pis[ok])
        pool[alpha] = hs
        print(
            f"alpha={alpha:<6} conv={ok.mean():.3f} iters_p50={np.median(iters[ok]):.0f} "
            f"iters_max={iters[ok].max()} H mean={hs.mean():.4f} sd={hs.std():.4f} "
            f"min={hs.min():.4f} max={hs.max():.4f}"
        )

    print("\n== best-of-1000 |H-target| at alpha=0.005 (bootstrap) ==")
    hs = pool[0.005]
    extra = []
    need = 4000 if args.fast else 8000
    while sum(len(x) for x in extra) + len(hs) < need:
        mats = np.stack([dirichlet_rows(M, 0.005, rng) for _ in range(500)])
        pis, _, ok = stationary_batch(mats)
        extra.append(entropy_rate_bits(mats[ok], pis[ok]))
    hs = np.concatenate([hs] + extra)
    gaps = []
    for _ in range(400):
        pick = rng.choice(hs, size=1000, replace=True)
        gaps.append(np.abs(pick - TARGET).min())
    gaps = np.array(gaps)
    print(
        f"pool={len(hs)} best-gap p50={np.median(gaps):.2e} p99={np.quantile(gaps, 0.99):.2e} "
        f"max={gaps.max():.2e}"
    )
    print("   -> pin DELTA_TARGET comfortably above p99 (e.g. 20x)")

    print("\n== AEP occupancy of ground-truth samples, band H +/- 0.2 ==")
    n_grid = [32, 64, 128, 256]
    n_chains = 12 if args.fast else 30
    samples = 10000
    occ = {n: [] for n in n_grid}
    for c in range(n_chains):
        P, pi, h = pick_chain_near_target(0.005, rng)
        states = sample_paths(P, pi, samples, max(n_grid), rng)
        nll = conditional_nll_prefix(P, states, n_grid)
        for n in n_grid:
            frac = np.mean(np.abs(nll[n] - h) <= EPSILON)
            occ[n].append(frac)
    for n in n_grid:
        a = np.array(occ[n])
        print(f"n={n:<4} occ min={a.min():.4f} mean={a.mean():.4f} max={a.max():.4f}")
    print("   -> pin per-n occupancy floors below observed min with margin")

    print("\n== seed stability of occupancy at n=128 (one chain, 6 seeds) ==")
    P, pi, h = pick_chain_near_target(0.005, rng)
    fr = []
    for s in range(6):
        r2 = np.random.default_rng(777 + s)
        states = sample_paths(P, pi, samples, 128, r2)
        nll = conditional_nll_prefix(P, states, [128])[128]
        fr.append(np.mean(np.abs(nll - h) <= EPSILON))
    fr = np.array(fr)
    print(f"occ per seed: {np.array2string(fr, precision=4)}  spread={fr.max() - fr.min():.4f}")

    print("\n== wrapped-chain temperature contrast (closed form) ==")
    for c in range(4):
        P, pi, h = pick_chain_near_target(0.005, rng)
        out = []
        for T in [1.0, 1.3, 1.5]:
            with np.errstate(divide="ignore"):
                lw = np.where(P > 0, np.log(P), -np.inf) / T
            lw -= lw.max(axis=1, keepdims=True)
            Q = np.exp(lw)
            Q /= Q.sum(axis=1, keepdims=True)
            w, _, ok = stationary_batch(Q[None, :, :])
            step = np.where(Q > 0, Q * (-np.log2(np.maximum(P, MIN_NORMAL))), 0.0).sum(axis=1)
            out.append(float(w[0] @ step))
        print(
            f"chain {c}: H={h:.3f} E[nll] T=1.0:{out[0]:.3f} T=1.3:{out[1]:.3f} "
            f"T=1.5:{out[2]:.3f} delta(1.0->1.5)={out[2] - out[0]:.3f}"
        )
    print("   -> pin probe-side margin for the example claim below min delta")
    return 0


if __name__ == "__main__":
    sys.exit(main())
