"""Independent reference computations used only by the tests.

None of these share code paths with the package: the lasso oracle solves the
split-variable reformulation W = U - V, U, V >= 0 by projected gradient, the
NLL is recomputed with plain loops, and the AUC oracle counts pairs.
"""

import math

import numpy as np


def nll_loops(W, b, X, y):
    total = 0.0
    for i in range(X.shape[0]):
        z = [float(W[c] @ X[i] + b[c]) for c in range(W.shape[0])]
        m = max(z)
        total += m + math.log(sum(math.exp(v - m) for v in z)) - z[y[i]]
    return total


def standardize(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale < 1e-12] = 1.0
    return (X - mean) / scale


def _smooth(U, V, b, X, Y, lam):
    W = U - V
    Z = X @ W.T + b
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    S = E.sum(axis=1, keepdims=True)
    f = float(np.sum(np.log(S[:, 0])) - np.sum(Z * Y)) + lam * float(U.sum() + V.sum())
    G = E / S - Y
    gW = G.T @ X
    return f, gW + lam, -gW + lam, G.sum(axis=0)


def lasso_oracle(X, y, lam, n_classes, iters=100_000, gtol=1e-11):
    """Penalised objective at the split-variable projected-gradient solution.

    Uses a conservative constant step and stops early once the projected
    gradient vanishes; otherwise runs the full ``iters`` iterations.
    """
    Xs = standardize(np.asarray(X, dtype=float))
    n, d = Xs.shape
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y] = 1.0
    U = np.zeros((n_classes, d))
    V = np.zeros((n_classes, d))
    b = np.zeros(n_classes)
    # split variables double the Hessian bound along the (U, V) directions
    step = 1.0 / (np.linalg.norm(Xs, 2) ** 2 * 2 + n)
    best = math.inf
    for _ in range(iters):
        f, gU, gV, gb = _smooth(U, V, b, Xs, Y, lam)
        best = min(best, f)
        U = np.maximum(U - step * gU, 0.0)
        V = np.maximum(V - step * gV, 0.0)
        b = b - step * gb
        pg = max(
            np.abs(gb).max(),
            np.abs(np.where(U > 0, gU, np.minimum(gU, 0))).max(initial=0.0),
            np.abs(np.where(V > 0, gV, np.minimum(gV, 0))).max(initial=0.0),
        )
        if pg < gtol:
            break
    return min(best, _smooth(U, V, b, Xs, Y, lam)[0])


def unregularized_gd(X, y, n_classes, iters=20_000, step=0.05):
    """Plain gradient descent on the mean NLL without standardisation."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    W = np.zeros((n_classes, d))
    b = np.zeros(n_classes)
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y] = 1.0
    for _ in range(iters):
        Z = X @ W.T + b
        Z -= Z.max(axis=1, keepdims=True)
        P = np.exp(Z)
        P /= P.sum(axis=1, keepdims=True)
        G = (P - Y) / n
        W -= step * G.T @ X
        b -= step * G.sum(axis=0)
    return np.argmax(X @ W.T + b, axis=1)


def auc_pairs(scores, positive):
    """Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(tie)."""
    pos = scores[positive]
    neg = scores[~positive]
    gt = (pos[:, None] > neg[None, :]).sum()
    eq = (pos[:, None] == neg[None, :]).sum()
    return (gt + 0.5 * eq) / (len(pos) * len(neg))


def subgradient_gap(W, b, X, Y, lam):
    """Max violation of the lasso optimality conditions at (W, b)."""
    Z = X @ W.T + b
    Z -= Z.max(axis=1, keepdims=True)
    P = np.exp(Z)
    P /= P.sum(axis=1, keepdims=True)
    G = P - Y
    gW = G.T @ X
    viol = np.where(W != 0, np.abs(gW + lam * np.sign(W)), np.maximum(np.abs(gW) - lam, 0))
    return max(viol.max(initial=0.0), np.abs(G.sum(axis=0)).max())
