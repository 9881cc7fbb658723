"""Spectra of general real matrices and first-order eigenvalue perturbation.

Left eigenvectors follow the dual-space convention ``M^T v = nu v`` and the
pairing ``<v, u> = v^T u`` is bilinear (no complex conjugation), so for a
simple eigenvalue the first-order shift is

    d nu_k = <v_k, dM u_k> / <v_k, u_k>.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (DegenerateEigenvalue, EigenSolveFailure, NotSemisimple,
                     SingularPairing, VanishingPairing)


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Eigenvalues sorted by descending real part (ties: descending imaginary).

    ``right_vectors[:, k]`` and ``left_vectors[:, k]`` are unit-norm.
    ``residuals[k]`` is the larger of the right and left relative backward
    errors ``||M u - nu u|| / ||M||``.  ``pairings[k] = <v_k, u_k>``.
    ``degenerate[k]`` marks eigenvalues with another eigenvalue within the
    gap tolerance (including the numerically split copies of a Jordan block).
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    residuals: np.ndarray
    pairings: np.ndarray
    degenerate: np.ndarray
    norm: float

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def abscissa(self) -> float:
        return float(self.eigenvalues.real.max())


def _as_matrix(M) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def _flush_tiny(M: np.ndarray) -> np.ndarray:
    """Zero entries below ``eps^2 * max|M|``.

    The change is far below the solver's backward error, and it keeps LAPACK's
    balancing step from breaking down on extreme dynamic ranges.
    """
    if M.size == 0:
        return M
    tiny = np.finfo(float).eps ** 2 * np.abs(M).max()
    small = np.abs(M) < tiny
    if not small.any():
        return M
    M = M.copy()
    M[small] = 0.0
    return M


def _order(w: np.ndarray) -> np.ndarray:
    return np.lexsort((-w.imag, -w.real))


def spectral_abscissa(M) -> float:
    """Largest real part over the spectrum of ``M``."""
    M = _as_matrix(M)
    if M.shape[0] == 0:
        raise ValueError("empty matrix")
    try:
        w = sla.eigvals(_flush_tiny(M), check_finite=False)
    except sla.LinAlgError as exc:
        raise EigenSolveFailure(str(exc)) from exc
    return float(w.real.max())


def pair(v, u) -> complex:
    return complex(np.dot(v, u))


def eigenpairs(M, gap: float = 1e-8) -> SpectrumResult:
    """Full eigendecomposition with left and right eigenvectors."""
    M = _as_matrix(M)
    try:
        w, vl, vr = sla.eig(_flush_tiny(M), left=True, right=True, check_finite=False)
    except sla.LinAlgError as exc:
        raise EigenSolveFailure(str(exc)) from exc
    order = _order(w)
    w = w[order]
    # scipy returns vl with vl^H M = w vl^H, i.e. M^T conj(vl) = w conj(vl)
    left = np.conj(vl[:, order])
    right = vr[:, order]
    left = left / np.linalg.norm(left, axis=0)
    right = right / np.linalg.norm(right, axis=0)
    norm = float(np.linalg.norm(M, 2)) if M.size else 0.0
    scale = norm if norm > 0 else 1.0
    res_r = np.linalg.norm(M @ right - right * w, axis=0) / scale
    res_l = np.linalg.norm(M.T @ left - left * w, axis=0) / scale
    pairings = np.einsum("ik,ik->k", left, right)
    dist = np.abs(w[:, None] - w[None, :]) + np.diag(np.full(len(w), np.inf))
    degenerate = (dist.min(axis=1, initial=np.inf) <= gap * scale)
    # a Jordan block can split by more than the gap but still has ~0 pairing
    degenerate |= np.abs(pairings) < np.sqrt(np.finfo(float).eps)
    return SpectrumResult(w, right, left, np.maximum(res_r, res_l), pairings,
                          degenerate, norm)


def perturb_simple(base: SpectrumResult, dM, k: int, gap: float = 1e-8,
                   pairing_tol: float = 1e-10) -> complex:
    """First-order shift of the simple eigenvalue ``base.eigenvalues[k]``."""
    dM = np.asarray(dM)
    w = base.eigenvalues
    scale = base.norm if base.norm > 0 else 1.0
    others = np.delete(w, k)
    if others.size and np.abs(others - w[k]).min() <= gap * scale:
        raise DegenerateEigenvalue(
            f"eigenvalue {w[k]} has a neighbour within {gap:g}*||M||; "
            "use perturb_degenerate")
    u = base.right_vectors[:, k]
    v = base.left_vectors[:, k]
    denom = pair(v, u)
    if abs(denom) < pairing_tol:
        raise VanishingPairing(
            f"<v, u> = {abs(denom):.3e} for eigenvalue {w[k]} (near-defective)")
    return pair(v, dM @ u) / denom


def _null_space(A: np.ndarray, tol: float) -> np.ndarray:
    _, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > tol))
    return np.conj(vh[rank:]).T


def perturb_degenerate(M, dM, k: int, cluster_tol: float = 1e-8,
                       rank_tol: float = 1e-9, cond_max: float = 1e12) -> np.ndarray:
    """First-order splitting of a semisimple multiple eigenvalue.

    ``k`` indexes the sorted spectrum of ``M`` (any member of the cluster).
    The shifts are the roots ``z`` of ``det(F - z G) = 0`` with
    ``F[a, b] = <v_a, dM u_b>`` and ``G[a, b] = <v_a, u_b>`` over bases of
    the left and right eigenspaces.
    """
    M = _as_matrix(M)
    dM = np.asarray(dM)
    w = sla.eigvals(M)
    w = w[_order(w)]
    scale = max(float(np.linalg.norm(M, 2)), 1.0)
    nu0 = w[k]
    members = np.abs(w - nu0) <= cluster_tol * scale
    mult = int(members.sum())
    nu = w[members].mean()
    n = M.shape[0]
    shifted = M - nu * np.eye(n)
    U = _null_space(shifted, rank_tol * scale)
    V = _null_space(shifted.T, rank_tol * scale)
    if U.shape[1] != mult or V.shape[1] != mult:
        raise NotSemisimple(
            f"eigenvalue {nu} has algebraic multiplicity {mult} but "
            f"{U.shape[1]}-dimensional eigenspace")
    G = V.T @ U
    F = V.T @ dM @ U
    if np.linalg.cond(G) > cond_max:
        raise SingularPairing(f"pairing matrix G has condition {np.linalg.cond(G):.3e}")
    z = sla.eigvals(F, G)
    return z[_order(z)]


def biorthogonality_defect(res: SpectrumResult, gap: float = 1e-8) -> float:
    """Largest ``|<v_j, u_k>|`` over pairs with distinct eigenvalues."""
    P = res.left_vectors.T @ res.right_vectors
    w = res.eigenvalues
    scale = res.norm if res.norm > 0 else 1.0
    distinct = np.abs(w[:, None] - w[None, :]) > gap * scale
    return float(np.abs(P[distinct]).max(initial=0.0))
