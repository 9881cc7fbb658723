"""Closed evolution operators for degree-m moments of a linear SDE.

For ``F(x) = x^{k_1} ... x^{k_m}`` the backward Kolmogorov generator of
the linear system gives

    d/dt E[F] = sum_s A^{k_s}_j E[F with k_s -> j]
              + sum_{a<b} C^{k_a, k_b}_{j, l} E[F with k_a -> j, k_b -> l].

Moments are symmetric under permutation of the indices, so they live on the
multiset basis of non-decreasing tuples (size ``binom(n+m-1, m)``).  Rows of
the operator matrix are indexed by the moment being differentiated, so
``dY/dt = matrix @ Y``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np
from scipy import sparse
from scipy.special import comb as vcomb

from .core_model import (CorrelationTensor, DiagonalNoiseSpec, LinearSDESystem,
                         correlation_from_noise)
from .errors import BasisTooLarge, IndexOutOfRange, SpecError

DEFAULT_CAP = 20000


@dataclass(frozen=True, eq=False)
class MomentBasis:
    """Non-decreasing index tuples of length ``degree`` over ``range(dim)``.

    Tuples are 0-based and listed in lexicographic order.
    """

    dim: int
    degree: int
    tuples: np.ndarray = field(init=False, repr=False)
    _colex_to_pos: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim < 1 or self.degree < 0:
            raise SpecError(f"invalid basis dim={self.dim}, degree={self.degree}")
        tup = np.array(
            list(itertools.combinations_with_replacement(range(self.dim), self.degree)),
            dtype=np.int64).reshape(-1, self.degree)
        tup.setflags(write=False)
        object.__setattr__(self, "tuples", tup)
        perm = np.empty(len(tup), dtype=np.int64)
        perm[self._colex_rank(tup)] = np.arange(len(tup))
        perm.setflags(write=False)
        object.__setattr__(self, "_colex_to_pos", perm)

    @property
    def size(self) -> int:
        return len(self.tuples)

    def __len__(self):
        return self.size

    @property
    def index_multisets(self) -> list[tuple[int, ...]]:
        return [tuple(int(k) for k in t) for t in self.tuples]

    def _colex_rank(self, sorted_tuples: np.ndarray) -> np.ndarray:
        # multiset c_1 <= ... <= c_m  <->  combination d_i = c_i + i
        m = self.degree
        if m == 0:
            return np.zeros(sorted_tuples.shape[:-1], dtype=np.int64)
        d = sorted_tuples + np.arange(m)
        ranks = vcomb(d, np.arange(1, m + 1), exact=False)
        return np.rint(ranks.sum(axis=-1)).astype(np.int64)

    def positions(self, tuples) -> np.ndarray:
        """Basis positions for an array of tuples (any order), shape ``(..., m)``."""
        t = np.asarray(tuples, dtype=np.int64)
        if t.shape[-1] != self.degree:
            raise IndexOutOfRange(
                f"tuple length {t.shape[-1]} does not match degree {self.degree}")
        if t.size and (t.min() < 0 or t.max() >= self.dim):
            raise IndexOutOfRange(f"indices must lie in 0..{self.dim - 1}")
        return self._colex_to_pos[self._colex_rank(np.sort(t, axis=-1))]

    def lookup(self, tup) -> int:
        return int(self.positions(np.asarray(tup)[None, :])[0])


@dataclass(frozen=True, eq=False)
class MomentOperator:
    basis: MomentBasis
    matrix: np.ndarray

    def __post_init__(self):
        if sparse.issparse(self.matrix):
            shape = self.matrix.shape
        else:
            m = np.array(self.matrix, dtype=float, copy=True)
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
            shape = m.shape
        if shape != (self.basis.size, self.basis.size):
            raise ValueError(f"matrix shape {shape} does not match basis size {self.basis.size}")

    @property
    def degree(self) -> int:
        return self.basis.degree

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if sparse.issparse(self.matrix) else self.matrix


def basis_size(n: int, m: int) -> int:
    return comb(n + m - 1, m)


def apply_generator(sys: LinearSDESystem, C: CorrelationTensor, monomial) -> dict:
    """Time derivative of ``E[x^{k_1} ... x^{k_m}]`` as a combination of moments.

    Keys of the result are sorted index tuples; zero coefficients are dropped.
    """
    k = tuple(int(i) for i in monomial)
    n = sys.dim
    if any(i < 0 or i >= n for i in k):
        raise IndexOutOfRange(f"monomial {k} has indices outside 0..{n - 1}")
    A = sys.drift
    values = C.values
    out: dict[tuple, float] = {}

    def add(key, coef):
        if coef != 0.0:
            key = tuple(sorted(key))
            out[key] = out.get(key, 0.0) + coef

    for s, ks in enumerate(k):
        for j in range(n):
            add(k[:s] + (j,) + k[s + 1:], A[ks, j])
    for a, b in itertools.combinations(range(len(k)), 2):
        for j in range(n):
            for l in range(n):
                t = list(k)
                t[a], t[b] = j, l
                add(t, values[k[a], j, k[b], l])
    return {key: c for key, c in out.items() if c != 0.0}


def _check_size(n, m, cap):
    if m < 1:
        raise SpecError(f"degree must be >= 1, got {m}")
    size = basis_size(n, m)
    if size > cap:
        raise BasisTooLarge(size, cap)
    return MomentBasis(n, m)


def _drift_triplets(basis: MomentBasis, drift: np.ndarray):
    T = basis.tuples
    S, m = T.shape
    n = basis.dim
    rows, cols, vals = [], [], []
    for s in range(m):
        moved = np.repeat(T[:, None, :], n, axis=1)
        moved[:, :, s] = np.arange(n)[None, :]
        rows.append(np.repeat(np.arange(S), n))
        cols.append(basis.positions(moved).ravel())
        vals.append(drift[T[:, s], :].ravel())
    return rows, cols, vals


def _noise_triplets(basis: MomentBasis, values: np.ndarray):
    T = basis.tuples
    S, m = T.shape
    n = basis.dim
    rows, cols, vals = [], [], []
    jj, ll = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    for a, b in itertools.combinations(range(m), 2):
        moved = np.repeat(T[:, None, :], n * n, axis=1)
        moved[:, :, a] = jj.ravel()[None, :]
        moved[:, :, b] = ll.ravel()[None, :]
        coef = values[T[:, a][:, None, None], jj[None], T[:, b][:, None, None], ll[None]]
        rows.append(np.repeat(np.arange(S), n * n))
        cols.append(basis.positions(moved).ravel())
        vals.append(coef.reshape(S, n * n).ravel())
    return rows, cols, vals


def _assemble(basis, triplets, as_sparse):
    rows, cols, vals = triplets
    S = basis.size
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        v = np.concatenate(vals)
        keep = v != 0.0
        r, c, v = r[keep], c[keep], v[keep]
    else:
        r = c = np.zeros(0, dtype=np.int64)
        v = np.zeros(0)
    if as_sparse:
        mat = sparse.coo_matrix((v, (r, c)), shape=(S, S)).tocsr()
        mat.sum_duplicates()
        return mat
    mat = np.zeros((S, S))
    np.add.at(mat, (r, c), v)
    return mat


def build_moment_operator(sys: LinearSDESystem, m: int, cap: int = DEFAULT_CAP,
                          as_sparse: bool = False) -> MomentOperator:
    """Matrix of the degree-``m`` moment evolution operator on the multiset basis."""
    basis = _check_size(sys.dim, m, cap)
    C = correlation_from_noise(sys)
    # drift and noise summed separately so that split_unperturbed adds up exactly
    base = _assemble(basis, _drift_triplets(basis, sys.drift), as_sparse)
    delta = _assemble(basis, _noise_triplets(basis, C.values), as_sparse)
    return MomentOperator(basis, base + delta)


def build_moment_operator_diagonal(spec: DiagonalNoiseSpec, drift, m: int,
                                   cap: int = DEFAULT_CAP,
                                   as_sparse: bool = False) -> MomentOperator:
    """Same operator for diagonal noise: the noise only adds to the diagonal.

    Each basis element ``k`` picks up ``sum_{a<b} V[k_a, k_b]`` with
    ``V = rates @ rates.T``.
    """
    spec.check()
    drift = np.atleast_2d(np.asarray(drift, dtype=float))
    if drift.shape != (spec.dim, spec.dim):
        raise SpecError(f"drift shape {drift.shape} does not match noise dim {spec.dim}")
    basis = _check_size(spec.dim, m, cap)
    rows, cols, vals = _drift_triplets(basis, drift)
    T = basis.tuples
    V = spec.pair_matrix
    diag = np.zeros(basis.size)
    for a, b in itertools.combinations(range(m), 2):
        diag += V[T[:, a], T[:, b]]
    idx = np.arange(basis.size)
    rows.append(idx)
    cols.append(idx)
    vals.append(diag)
    return MomentOperator(basis, _assemble(basis, (rows, cols, vals), as_sparse))


def split_unperturbed(sys: LinearSDESystem, m: int, cap: int = DEFAULT_CAP):
    """Split into the noise-free Kronecker-sum part and the noise part.

    Returns ``(unperturbed, delta)`` where ``unperturbed`` is a
    :class:`MomentOperator` with zero noise and ``delta`` the dense matrix of
    the pair-correlation terms.  Their sum is ``build_moment_operator(sys, m)``.
    """
    basis = _check_size(sys.dim, m, cap)
    base = _assemble(basis, _drift_triplets(basis, sys.drift), False)
    C = correlation_from_noise(sys)
    delta = _assemble(basis, _noise_triplets(basis, C.values), False)
    return MomentOperator(basis, base), delta


def growth_exponent(op: MomentOperator) -> float:
    """``spectral_abscissa / degree``: the per-unit-degree exponent of the moments."""
    from .spectral import spectral_abscissa
    return spectral_abscissa(op.dense()) / op.degree


def norm_power_weights(basis: MomentBasis) -> np.ndarray:
    """Weights ``w`` with ``|x|^m = sum_k w[k] x^{k_1} ... x^{k_m}`` (Euclidean, even ``m``).

    Expanding ``(sum_i x_i^2)^(m/2)`` gives multinomial coefficients on the
    tuples whose indices all occur an even number of times.
    """
    m = basis.degree
    if m % 2:
        raise SpecError(f"|x|^m is a polynomial only for even m, got {m}")
    T = basis.tuples
    counts = np.stack([(T == i).sum(axis=1) for i in range(basis.dim)], axis=1)
    even = np.all(counts % 2 == 0, axis=1)
    half = counts // 2
    w = np.zeros(basis.size)
    for r in np.flatnonzero(even):
        coef = factorial(m // 2)
        for c in half[r]:
            coef //= factorial(int(c))
        w[r] = coef
    return w


def moment_trajectory(op: MomentOperator, weights, x0, times) -> np.ndarray:
    """Exact ``sum_k weights[k] E[x^k](t)`` from a deterministic start ``x0``."""
    from scipy.linalg import expm
    x0 = np.asarray(x0, dtype=float)
    y0 = np.prod(x0[op.basis.tuples], axis=1)
    M = op.dense()
    return np.array([weights @ (expm(M * t) @ y0) for t in times])
