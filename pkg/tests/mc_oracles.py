"""Posterior-sampling oracles for the two analytic divergence estimators.

Everything here is dense, brute-force linear algebra on explicit hat
matrices, independent of the package's eigenbasis/QR computation paths: the
reference posterior (mean vector Gaussian around H y, variance scaled
inverse-gamma) and the candidate posterior are sampled directly and the
conditional divergence formulas are averaged over the draws.
"""

import numpy as np


def dense_setup(X, y, cfg, subset):
    """Dense H, H_j and every scalar both oracles need."""
    from dprob import build_kernel

    n = len(y)
    K = build_kernel(X, cfg)
    H = K @ np.linalg.inv(K + np.eye(n))
    H = 0.5 * (H + H.T)
    Xj = np.column_stack([np.ones(n)] + [X[:, j] for j in subset])
    Q, _ = np.linalg.qr(Xj)
    Hj = Q @ Q.T
    rss0 = float(y @ (np.eye(n) - H) @ y)
    rssj = float(y @ (np.eye(n) - Hj) @ y)
    return {"n": n, "H": H, "Hj": Hj, "Q": Q, "rss0": rss0, "rssj": rssj,
            "Hy": H @ y, "Hjy": Hj @ y}


def _sample_inv_gamma(rng, shape, scale, size):
    return scale / rng.gamma(shape, 1.0, size=size)


def mc_kl1(X, y, cfg, subset, draws, seed, batch=50_000):
    """Average the fully conditional divergence over both posteriors.

    Returns (mean, standard error) of
    (1/2)[s0/sj + ||mu_j - mu_0||^2/(n sj) - 1 + log(sj/s0)]
    with (mu_0, s0) and (mu_j, sj) drawn from the reference and candidate
    posteriors.
    """
    s = dense_setup(X, y, cfg, subset)
    n, Q = s["n"], s["Q"]
    w0, V0 = np.linalg.eigh(s["H"])
    w0 = np.clip(w0, 0.0, None)
    sqrtH = V0 @ (np.sqrt(w0)[:, None] * V0.T)
    rng = np.random.default_rng(seed)
    vals = []
    remaining = draws
    while remaining > 0:
        b = min(batch, remaining)
        remaining -= b
        s0 = _sample_inv_gamma(rng, n / 2.0, s["rss0"] / 2.0, b)
        sj = _sample_inv_gamma(rng, n / 2.0, s["rssj"] / 2.0, b)
        mu0 = s["Hy"] + np.sqrt(s0)[:, None] * (rng.standard_normal((b, n)) @ sqrtH)
        muj = s["Hjy"] + np.sqrt(sj)[:, None] * (rng.standard_normal((b, Q.shape[1])) @ Q.T)
        sq = np.sum((muj - mu0) ** 2, axis=1)
        vals.append(0.5 * (s0 / sj + sq / (n * sj) - 1.0 + np.log(sj / s0)))
    vals = np.concatenate(vals)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(draws))


def mc_kl2(X, y, cfg, subset, draws, seed):
    """Average the conditional predictive-density divergence over the two
    inverse-gamma variance posteriors.

    The conditional form, per observation, is
    (1/2)[qp/(n sj) + (s0/sj) tp/n + log(sj/s0) + (log det(I+Hj) - log det(I+H))/n - 1]
    with qp and tp the predictive quadratic form and trace computed densely.
    """
    s = dense_setup(X, y, cfg, subset)
    n = s["n"]
    I = np.eye(n)
    v = s["Hjy"] - s["Hy"]
    qp = float(v @ np.linalg.solve(I + s["Hj"], v))
    tp = float(np.trace(np.linalg.solve(I + s["Hj"], I + s["H"])))
    Lj = float(np.linalg.slogdet(I + s["Hj"])[1])
    L0 = float(np.linalg.slogdet(I + s["H"])[1])
    rng = np.random.default_rng(seed)
    s0 = _sample_inv_gamma(rng, n / 2.0, s["rss0"] / 2.0, draws)
    sj = _sample_inv_gamma(rng, n / 2.0, s["rssj"] / 2.0, draws)
    vals = 0.5 * (qp / (n * sj) + (s0 / sj) * tp / n + np.log(sj / s0)
                  + (Lj - L0) / n - 1.0)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(draws))
