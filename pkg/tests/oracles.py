"""Independent, loop-based transcriptions used as test oracles.

Nothing here imports the package; each function is written from the
defining formulas with explicit loops so that vectorisation slips in the
library cannot be mirrored.
"""

import math

import numpy as np


def qis_loop(eigs, p, n):
    lam = sorted(float(x) for x in eigs)
    c = p / n
    h = min(c * c, 1.0 / (c * c)) ** 0.35 / p**0.35
    k = min(p, n)
    inv = [1.0 / lam[i] for i in range(p - k, p)]
    theta, htheta = [], []
    for j in range(k):
        s1 = s2 = 0.0
        for i in range(k):
            d = inv[i] - inv[j]
            den = d * d + h * h * inv[i] * inv[i]
            s1 += inv[i] * d / den
            s2 += inv[i] * h * inv[i] / den
        theta.append(s1 / k)
        htheta.append(s2 / k)
    if p <= n:
        delta = [
            1.0
            / ((1 - c) ** 2 * inv[j] + 2 * c * (1 - c) * inv[j] * theta[j] + c * c * inv[j] * (theta[j] ** 2 + htheta[j] ** 2))
            for j in range(k)
        ]
    else:
        d0 = 1.0 / ((c - 1) * (sum(inv) / k))
        delta = [d0] * (p - n) + [1.0 / (inv[j] * (theta[j] ** 2 + htheta[j] ** 2)) for j in range(k)]
    scale = sum(lam) / sum(delta)
    return np.array([d * scale for d in delta])


def ledoit_wolf_loop(X):
    """Ledoit-Wolf (2004) with demeaning and divisor n; returns (rho, estimate)."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    means = [sum(X[t, j] for t in range(n)) / n for j in range(p)]
    Xc = [[X[t, j] - means[j] for j in range(p)] for t in range(n)]
    S = [[sum(Xc[t][i] * Xc[t][j] for t in range(n)) / n for j in range(p)] for i in range(p)]
    m = sum(S[i][i] for i in range(p)) / p
    d2 = sum((S[i][j] - (m if i == j else 0.0)) ** 2 for i in range(p) for j in range(p)) / p
    b2 = 0.0
    for t in range(n):
        b2 += sum((Xc[t][i] * Xc[t][j] - S[i][j]) ** 2 for i in range(p) for j in range(p)) / p
    b2 /= n * n
    b2 = min(b2, d2)
    rho = b2 / d2
    out = np.array([[(1 - rho) * S[i][j] + (rho * m if i == j else 0.0) for j in range(p)] for i in range(p)])
    return rho, out


def fmap_loop(Z, U, lam):
    Z = np.asarray(Z, dtype=float)
    n, p = Z.shape
    M = U @ np.diag(1.0 / np.asarray(lam)) @ U.T
    out = np.zeros((p, p))
    for t in range(n):
        z = Z[t]
        q = sum(z[i] * M[i, j] * z[j] for i in range(p) for j in range(p))
        out += np.outer(z, z) / q
    return out / n


def objective_loop(Z, U, lam):
    Z = np.asarray(Z, dtype=float)
    n, p = Z.shape
    total = 0.0
    for t in range(n):
        w = U.T @ Z[t]
        total += math.log(sum(w[j] ** 2 / lam[j] for j in range(p)))
    return total / n


def rotation2(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def tyler_loop(Z, iters=2000):
    Z = np.asarray(Z, dtype=float)
    n, p = Z.shape
    H = np.eye(p)
    for _ in range(iters):
        Hinv = np.linalg.inv(H)
        M = np.zeros((p, p))
        for t in range(n):
            M += np.outer(Z[t], Z[t]) / (Z[t] @ Hinv @ Z[t])
        M *= p / n
        H = p * M / np.trace(M)
    return H


def max_drawdown_loop(returns):
    wealth, peak, worst = 1.0, 1.0, 0.0
    for r in returns:
        wealth *= 1.0 + r
        peak = max(peak, wealth)
        worst = max(worst, (peak - wealth) / peak)
    return worst
