"""Shared generators and independent oracles for the test suite."""

import numpy as np

from opscale import CPMap, Partition


def random_complex(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def random_pd(rng, n, floor=0.1):
    """Well-conditioned Hermitian positive definite matrix."""
    a = random_complex(rng, (n, n))
    return a @ a.conj().T / n + floor * np.eye(n)


def random_hermitian(rng, n):
    a = random_complex(rng, (n, n))
    return (a + a.conj().T) / 2


def random_upper(rng, n):
    """Invertible upper-triangular matrix with moderate condition number."""
    u = np.triu(random_complex(rng, (n, n), 0.5))
    u[np.diag_indices(n)] = rng.uniform(0.5, 1.5, n).astype(complex)
    return u


def random_unitary(rng, n):
    q, r = np.linalg.qr(random_complex(rng, (n, n)))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_kraus(rng, m, n, r, scale=None):
    if scale is None:
        scale = 1.0 / np.sqrt(2.0 * r * max(m, n))
    return [random_complex(rng, (m, n), scale) for _ in range(r)]


def random_cpmap(rng, m, n, r, scale=None):
    return CPMap(random_kraus(rng, m, n, r, scale))


def doubly_stochastic_map(rng, n, r):
    """Mixture of unitary conjugations: T(I) = I and T*(I) = I exactly."""
    return CPMap([random_unitary(rng, n) / np.sqrt(r) for _ in range(r)])


def spectrum(rng, n, floor=0.0, total=1.0):
    """Nonincreasing positive vector with the given sum, entries >= floor."""
    w = rng.dirichlet(np.ones(n))
    v = floor + (total - n * floor) * w
    return np.sort(v)[::-1]


def random_partition(rng, max_total=12):
    """Random nonincreasing positive integer parts with bounded total."""
    while True:
        k = int(rng.integers(1, 5))
        parts = np.sort(rng.integers(1, 5, k))[::-1]
        if parts.sum() <= max_total:
            return Partition(tuple(int(x) for x in parts))


def integer_partition(rng, total, parts):
    """Random partition of `total` into exactly `parts` positive parts."""
    cuts = np.sort(rng.choice(np.arange(1, total), size=parts - 1,
                              replace=False))
    comp = np.diff(np.concatenate([[0], cuts, [total]]))
    return np.sort(comp)[::-1].astype(np.float64)


def integer_composition(rng, total, parts):
    """Random ordered composition of `total` into `parts` positive parts."""
    cuts = np.sort(rng.choice(np.arange(1, total), size=parts - 1,
                              replace=False))
    return np.diff(np.concatenate([[0], cuts, [total]])).astype(np.float64)


def matrix_kraus(A):
    """Kraus operators sqrt(A_ij) e_i e_j^T of a nonnegative matrix."""
    A = np.asarray(A, dtype=np.float64)
    m, n = A.shape
    ops = []
    for i in range(m):
        for j in range(n):
            if A[i, j] > 0:
                K = np.zeros((m, n), dtype=np.complex128)
                K[i, j] = np.sqrt(A[i, j])
                ops.append(K)
    return ops


def ras_scale(A, r, c, iters=200000, tol=1e-13):
    """Classical alternating row/column normalization (Sinkhorn oracle)."""
    S = np.array(A, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    for _ in range(iters):
        S = S * (r / S.sum(axis=1))[:, None]
        S = S * (c / S.sum(axis=0))[None, :]
        if (np.abs(S.sum(axis=1) - r).max() <= tol
                and np.abs(S.sum(axis=0) - c).max() <= tol):
            break
    return S


def ds_literal(primal, dual, p, q):
    """Independent transcription of the flag-weighted squared distance."""
    total = 0.0
    devd = dual - np.eye(dual.shape[0])
    for i in range(len(p)):
        delta = p[i] - (p[i + 1] if i + 1 < len(p) else 0.0)
        corner = devd[: i + 1, : i + 1]
        total += delta * np.linalg.norm(corner, "fro") ** 2
    devp = primal - np.eye(primal.shape[0])
    for j in range(len(q)):
        delta = q[j] - (q[j + 1] if j + 1 < len(q) else 0.0)
        corner = devp[: j + 1, : j + 1]
        total += delta * np.linalg.norm(corner, "fro") ** 2
    return total
