"""Independent reference implementations used only by tests."""

from itertools import combinations


def brute_force_lcs(a, b) -> int:
    """Longest common subsequence by exhaustive search over subsequences of the shorter input."""
    a, b = list(a), list(b)
    if len(a) > len(b):
        a, b = b, a

    def is_subsequence(sub, seq):
        it = iter(seq)
        return all(any(x == y for y in it) for x in sub)

    for k in range(len(a), 0, -1):
        for idx in combinations(range(len(a)), k):
            if is_subsequence([a[i] for i in idx], b):
                return k
    return 0


def dp_levenshtein(a, b) -> int:
    """Textbook full-matrix Wagner-Fischer."""
    a, b = list(a), list(b)
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[len(a)][len(b)]


def cobham_waits(lam_h, lam_l, mu_h, mu_l):
    """Mean waits of a two-class non-preemptive M/M/1 priority queue, written from first principles.

    Residual work seen by an arrival is sum(rho_i * E[S_i^2] / (2 E[S_i])) = sum(lam_i / mu_i^2)
    for exponential service. Class 1 waits W1 = R / (1 - rho1); class 2 waits W2 = R / ((1 - rho1)(1 - rho)).
    """
    rho1 = lam_h / mu_h
    rho = rho1 + lam_l / mu_l
    residual = sum(lam * (2 / mu**2) / 2 for lam, mu in ((lam_h, mu_h), (lam_l, mu_l)))
    return residual / (1 - rho1), residual / ((1 - rho1) * (1 - rho))


def set_prf(gen, ref):
    gen, ref = set(gen), set(ref)
    tp = len(gen & ref)
    p = tp / len(gen) if gen else 0.0
    r = tp / len(ref) if ref else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f
