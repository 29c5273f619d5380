"""Completely positive maps, marginal targets, scalings, and balancing.

A completely positive map T is stored through a list of Kraus operators
A_1, ..., A_r (all m x n):

    T(X)  = sum_i A_i X A_i^dag        (n x n  ->  m x m)
    T*(Y) = sum_i A_i^dag Y A_i        (m x m  ->  n x n)

Scaling by an invertible pair (g, h) replaces every A_i by g^dag A_i h,
i.e. T_{g,h}(X) = g^dag T(h X h^dag) g.

The balancing primitive used by every solver finds, for positive definite
S, the upper-triangular g with g^dag S g = I (a reversed Cholesky
factorization); when S is block-diagonal the factor is block-diagonal with
upper-triangular blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import NotInvertible, NotPositiveDefinite

__all__ = [
    "CPMap",
    "MarginalSpec",
    "ScalingPair",
    "apply",
    "dual_apply",
    "scale",
    "marginals",
    "balance_factor",
    "convert_pair",
    "hermitian_part",
    "singular_floor",
]


def _as_readonly_complex(a, name):
    out = np.array(a, dtype=np.complex128)
    if not np.all(np.isfinite(out.view(np.float64))):
        raise ValueError(f"{name} contains non-finite entries")
    out.setflags(write=False)
    return out


def hermitian_part(X):
    """Return (X + X^dag)/2, the Hermitian part of a square matrix."""
    X = np.asarray(X)
    return (X + X.conj().T) / 2


def _check_blocks(blocks, total, name):
    blocks = tuple(int(b) for b in blocks)
    if any(b <= 0 for b in blocks):
        raise ValueError(f"{name} must be positive integers, got {blocks}")
    if sum(blocks) != total:
        raise ValueError(f"{name} sum to {sum(blocks)}, expected {total}")
    return blocks


@dataclass(frozen=True, eq=False)
class CPMap:
    """A completely positive map given by its Kraus operators.

    Parameters
    ----------
    kraus : sequence of (m, n) array_like
        The Kraus operators. All must share the same shape, and there
        must be at least one.
    """

    kraus: tuple

    def __init__(self, kraus):
        ops = tuple(_as_readonly_complex(A, f"kraus[{i}]") for i, A in enumerate(kraus))
        if not ops:
            raise ValueError("a CPMap needs at least one Kraus operator")
        shape = ops[0].shape
        if len(shape) != 2:
            raise ValueError("Kraus operators must be matrices")
        for i, A in enumerate(ops):
            if A.shape != shape:
                raise ValueError(
                    f"kraus[{i}] has shape {A.shape}, expected {shape}"
                )
        object.__setattr__(self, "kraus", ops)

    @property
    def m(self):
        """Output dimension (rows of each Kraus operator)."""
        return self.kraus[0].shape[0]

    @property
    def n(self):
        """Input dimension (columns of each Kraus operator)."""
        return self.kraus[0].shape[1]

    @property
    def r(self):
        """Number of Kraus operators."""
        return len(self.kraus)

    def __repr__(self):
        return f"CPMap(m={self.m}, n={self.n}, r={self.r})"


def _block_slices(blocks):
    stops = np.cumsum(blocks)
    starts = stops - np.asarray(blocks)
    return [slice(int(a), int(b)) for a, b in zip(starts, stops)]


@dataclass(frozen=True, eq=False)
class MarginalSpec:
    """Target spectra for the two marginals.

    p (length n) is the spectrum of the input-side target P = diag(p) and
    q (length m) that of the output-side target Q = diag(q).  Entries are
    nonnegative and nonincreasing within each block of the optional block
    structure (a single block by default, i.e. globally nonincreasing).
    Block structure is how block-diagonal instances (matrix scaling, Horn,
    Forster) declare the flags their scaling groups preserve.
    """

    p: np.ndarray
    q: np.ndarray
    p_blocks: tuple = None
    q_blocks: tuple = None

    def __init__(self, p, q, p_blocks=None, q_blocks=None):
        p = np.array(p, dtype=np.float64)
        q = np.array(q, dtype=np.float64)
        if p.ndim != 1 or q.ndim != 1 or p.size == 0 or q.size == 0:
            raise ValueError("p and q must be nonempty vectors")
        if np.any(p < 0) or np.any(q < 0):
            raise ValueError("spectra must be nonnegative")
        p_blocks = _check_blocks(p_blocks if p_blocks is not None else (p.size,),
                                 p.size, "p_blocks")
        q_blocks = _check_blocks(q_blocks if q_blocks is not None else (q.size,),
                                 q.size, "q_blocks")
        for a, blocks, name in ((p, p_blocks, "p"), (q, q_blocks, "q")):
            for s in _block_slices(blocks):
                seg = a[s]
                if np.any(np.diff(seg) > 1e-12 * max(1.0, seg.max(initial=0.0))):
                    raise ValueError(f"{name} must be nonincreasing within blocks")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p_blocks", p_blocks)
        object.__setattr__(self, "q_blocks", q_blocks)

    @property
    def n(self):
        return self.p.size

    @property
    def m(self):
        return self.q.size

    @property
    def P(self):
        """diag(p) as a dense matrix."""
        return np.diag(self.p).astype(np.complex128)

    @property
    def Q(self):
        """diag(q) as a dense matrix."""
        return np.diag(self.q).astype(np.complex128)

    @property
    def trace_gap(self):
        """|sum(p) - sum(q)|; solvers require this to vanish."""
        return abs(float(self.p.sum() - self.q.sum()))

    def p_slices(self):
        return _block_slices(self.p_blocks)

    def q_slices(self):
        return _block_slices(self.q_blocks)

    def normalized(self):
        """Rescale so both spectra sum to 1; returns (spec, original sum)."""
        s = float(self.p.sum())
        if s <= 0:
            raise ValueError("cannot normalize an all-zero spectrum")
        return MarginalSpec(self.p / s, self.q / s, self.p_blocks, self.q_blocks), s


@dataclass(frozen=True, eq=False)
class ScalingPair:
    """An invertible pair (g, h) acting on T as T_{g,h}(X) = g^dag T(h X h^dag) g."""

    g: np.ndarray
    h: np.ndarray

    def __init__(self, g, h):
        g = _as_readonly_complex(g, "g")
        h = _as_readonly_complex(h, "h")
        for M, name in ((g, "g"), (h, "h")):
            if M.ndim != 2 or M.shape[0] != M.shape[1]:
                raise ValueError(f"{name} must be square")
            smin = np.linalg.svd(M, compute_uv=False)[-1]
            if not smin > 0:
                raise NotInvertible(f"{name} is numerically singular")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)


def apply(T, X):
    """Evaluate T(X) = sum_i A_i X A_i^dag, symmetrized against roundoff."""
    X = np.asarray(X, dtype=np.complex128)
    if X.shape != (T.n, T.n):
        raise ValueError(f"X has shape {X.shape}, expected {(T.n, T.n)}")
    out = np.zeros((T.m, T.m), dtype=np.complex128)
    for A in T.kraus:
        out += A @ X @ A.conj().T
    return hermitian_part(out)


def dual_apply(T, Y):
    """Evaluate the trace-dual T*(Y) = sum_i A_i^dag Y A_i, symmetrized."""
    Y = np.asarray(Y, dtype=np.complex128)
    if Y.shape != (T.m, T.m):
        raise ValueError(f"Y has shape {Y.shape}, expected {(T.m, T.m)}")
    out = np.zeros((T.n, T.n), dtype=np.complex128)
    for A in T.kraus:
        out += A.conj().T @ Y @ A
    return hermitian_part(out)


def scale(T, pair):
    """Return T_{g,h}, the map with Kraus operators g^dag A_i h."""
    g, h = pair.g, pair.h
    if g.shape != (T.m, T.m) or h.shape != (T.n, T.n):
        raise ValueError(
            f"pair shapes {g.shape}, {h.shape} do not match map ({T.m}, {T.n})"
        )
    gd = g.conj().T
    return CPMap([gd @ A @ h for A in T.kraus])


def marginals(T, M):
    """Return the pair (T(P), T*(Q)) for P = diag(p), Q = diag(q)."""
    if M.n != T.n or M.m != T.m:
        raise ValueError(
            f"marginal spec ({M.m}, {M.n}) does not match map ({T.m}, {T.n})"
        )
    return apply(T, M.P), dual_apply(T, M.Q)


def singular_floor(S):
    """Positive-definiteness cutoff: 1e-12 * trace(S) / dim."""
    S = np.asarray(S)
    return 1e-12 * float(np.trace(S).real) / S.shape[0]


def _balance_block(S):
    # g = L^{-dag} for the Cholesky factor S = L L^dag; upper triangular,
    # positive diagonal, and g^dag S g = L^{-1} S L^{-dag} = I.
    L = np.linalg.cholesky(S)
    Linv = scipy.linalg.solve_triangular(L, np.eye(S.shape[0], dtype=np.complex128),
                                         lower=True)
    return Linv.conj().T


def balance_factor(S, block_sizes=None):
    """Upper-triangular g with g^dag S g = I (equivalently g g^dag = S^{-1}).

    Parameters
    ----------
    S : (d, d) array_like
        Positive definite Hermitian matrix.
    block_sizes : sequence of int, optional
        When given, only the corresponding diagonal blocks of S are
        balanced and g is block-diagonal with upper-triangular blocks.

    Raises
    ------
    NotPositiveDefinite
        If the smallest eigenvalue of S does not exceed the singular
        floor 1e-12 * trace(S)/dim.  For the solvers this signals a
        vanishing capacity (infeasibility) or numerical breakdown.
    """
    S = hermitian_part(np.asarray(S, dtype=np.complex128))
    d = S.shape[0]
    floor = singular_floor(S)
    min_eig = float(np.linalg.eigvalsh(S)[0])
    if not min_eig > max(floor, 0.0):
        raise NotPositiveDefinite(min_eig)
    if block_sizes is None:
        block_sizes = (d,)
    block_sizes = _check_blocks(block_sizes, d, "block_sizes")
    try:
        blocks = [_balance_block(S[s, s]) for s in _block_slices(block_sizes)]
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(min_eig) from None
    if len(blocks) == 1:
        return blocks[0]
    return scipy.linalg.block_diag(*blocks).astype(np.complex128)


def convert_pair(pair, M):
    """Convert a (P -> I_m, Q -> I_n) scaling into the (I_n -> Q, I_m -> P) one.

    If T_{g,h}(P) = I and T*_{g,h}(Q) = I, then the returned matrices
    (g sqrt(Q), h sqrt(P)) satisfy T_{g',h'}(I_n) = Q and
    T*_{g',h'}(I_m) = P; this is an exact change of variables.  With
    approximate scalings the marginal errors pick up factors of at most
    max(q) and max(p) respectively.

    Returns plain ndarrays: when a spectrum has zero entries the
    converted matrices are singular by design (the zero-tail targets are
    only reachable in the limit).
    """
    g2 = pair.g @ np.diag(np.sqrt(M.q)).astype(np.complex128)
    h2 = pair.h @ np.diag(np.sqrt(M.p)).astype(np.complex128)
    return g2, h2
