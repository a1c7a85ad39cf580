"""Hermitian linear algebra with deterministic output.

Everything here is a thin, careful layer over ``numpy.linalg``: hermiticity
checks with scale-relative tolerances, eigendecompositions with a fixed gauge,
functional calculus, spectral projections, signatures and determinant-phase
windings of sampled matrix loops.
"""

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    BoundaryHitsSpectrum,
    NotHermitian,
    SamplingTooCoarse,
    SingularSample,
)

HERM_RTOL = 1e-10
RECON_RTOL = 1e-9
ZERO_RTOL = 1e-8
PHASE_STEP_MAX = np.pi / 2


def _norm(M):
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def tol_herm(M):
    return HERM_RTOL * (1.0 + _norm(M))


def tol_recon(M):
    return RECON_RTOL * (1.0 + _norm(M))


def tol_zero(M):
    return ZERO_RTOL * (1.0 + _norm(M))


def as_matrix(M) -> np.ndarray:
    """Coerce scalars and nested sequences to a square complex 2-d array."""
    A = np.asarray(M, dtype=complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def check_hermitian(M, tol=None) -> np.ndarray:
    """Return the hermitian part of `M`, raising if `M` is not hermitian."""
    M = as_matrix(M)
    tol = tol_herm(M) if tol is None else tol
    defect = _norm(M - M.conj().T)
    if defect > tol:
        raise NotHermitian(f"hermiticity defect {defect:.3e} exceeds {tol:.3e}")
    return 0.5 * (M + M.conj().T)


@dataclass(frozen=True)
class EigDecomp:
    """Eigenvalues in ascending order with unitary column eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self):
        V = self.vectors
        return (V * self.values) @ V.conj().T


def _fix_gauge(values, vectors, cluster_tol):
    # Eigenvectors of simple eigenvalues get their largest entry made real
    # positive; degenerate eigenspaces are rebuilt by Gram-Schmidt on the
    # projected standard basis, so LAPACK's arbitrary choice never leaks out.
    m = len(values)
    V = vectors.copy()
    i = 0
    while i < m:
        j = i + 1
        while j < m and values[j] - values[j - 1] <= cluster_tol:
            j += 1
        if j - i == 1:
            v = V[:, i]
            k = int(np.argmax(np.abs(v)))
            V[:, i] = v * (np.conj(v[k]) / abs(v[k]))
        else:
            Vc = V[:, i:j]
            Pc = Vc @ Vc.conj().T
            basis = []
            for col in range(m):
                w = Pc[:, col].copy()
                for b in basis:
                    w -= b * (b.conj() @ w)
                nw = np.linalg.norm(w)
                if nw > 1e-6:
                    basis.append(w / nw)
                if len(basis) == j - i:
                    break
            V[:, i:j] = np.column_stack(basis)
        i = j
    return V


def eig_hermitian(M, tol_herm=None) -> EigDecomp:
    """Eigendecomposition of a hermitian matrix with a deterministic gauge.

    Parameters
    ----------
    M : array_like
        Square hermitian matrix.
    tol_herm : float, optional
        Allowed ``||M - M*||``; defaults to ``1e-10 (1 + ||M||)``.

    Returns
    -------
    EigDecomp
        Ascending eigenvalues and unitary eigenvectors.  Eigenvectors of
        degenerate eigenvalues are orthonormalized in ascending index order.

    Raises
    ------
    NotHermitian
    """
    H = check_hermitian(M, tol_herm)
    w, V = np.linalg.eigh(H)
    V = _fix_gauge(w, V, tol_recon(H))
    return EigDecomp(w, V)


def eigvalsh_stack(stack) -> np.ndarray:
    """Eigenvalues of a stack of hermitian matrices (last two axes)."""
    A = np.asarray(stack, dtype=complex)
    return np.linalg.eigvalsh(0.5 * (A + np.swapaxes(A, -1, -2).conj()))


def functional_calculus(M, f: Callable[[np.ndarray], np.ndarray], tol_herm=None):
    """Apply ``f`` to a hermitian matrix through its spectrum.

    ``f`` receives the eigenvalue array.  Real-valued ``f`` gives a hermitian
    result; complex-valued ``f`` (used for unitaries such as ``exp(i pi x)``)
    is allowed and returns a normal matrix.
    """
    E = eig_hermitian(M, tol_herm)
    fv = np.asarray(f(E.values))
    R = (E.vectors * fv) @ E.vectors.conj().T
    if np.isrealobj(fv):
        R = 0.5 * (R + R.conj().T)
    return R


def spectral_projection(M, a: float, b: float, tol=None) -> np.ndarray:
    """Projection onto the eigenvectors of `M` with eigenvalue in ``[a, b]``.

    Raises BoundaryHitsSpectrum when ``a`` or ``b`` lies within ``tol``
    (default ``tol_zero(M)``) of an eigenvalue.
    """
    E = eig_hermitian(M)
    tol = tol_zero(as_matrix(M)) if tol is None else tol
    w = E.values
    for edge in (a, b):
        if np.isfinite(edge) and w.size and np.min(np.abs(w - edge)) < tol:
            raise BoundaryHitsSpectrum(f"interval edge {edge} within {tol:.1e} of spectrum")
    mask = (w >= a) & (w <= b)
    Vm = E.vectors[:, mask]
    return Vm @ Vm.conj().T


def signature(M, tol=None):
    """Return ``(n_plus, n_minus, n_zero)`` of a hermitian matrix."""
    H = check_hermitian(M)
    tol = tol_zero(H) if tol is None else tol
    w = np.linalg.eigvalsh(H)
    n_plus = int(np.sum(w > tol))
    n_minus = int(np.sum(w < -tol))
    return n_plus, n_minus, len(w) - n_plus - n_minus


def det_phases(stack, gap_min=1e-10) -> np.ndarray:
    """Unit complex numbers ``det(M)/|det(M)|`` for a stack of matrices."""
    A = np.asarray(stack, dtype=complex)
    if A.ndim == 1:
        A = A.reshape(-1, 1, 1)
    smin = np.linalg.svd(A, compute_uv=False)[..., -1]
    bad = np.flatnonzero(smin < gap_min)
    if bad.size:
        raise SingularSample(
            f"sample {int(bad[0])} has singular value {smin[bad[0]]:.3e} < {gap_min:.1e}")
    sign, _ = np.linalg.slogdet(A)
    return sign


def phase_increments(phases: np.ndarray) -> np.ndarray:
    """Principal-branch increments between consecutive unit phases."""
    return np.angle(phases[1:] * np.conj(phases[:-1]))


def det_phase_winding(loop: Sequence, closed: bool = True, gap_min: float = 1e-10):
    """Winding number (closed) or accumulated phase (open) of ``det`` along samples.

    Parameters
    ----------
    loop : sequence of square matrices (or scalars)
        Samples of the loop.  For ``closed=True`` the last sample connects
        back to the first; do not repeat the first sample at the end
        (a repeat only adds a zero increment, so it is harmless).
    closed : bool
        Return an integer winding number if true, the real accumulated phase
        otherwise.
    gap_min : float
        Minimum allowed smallest singular value of every sample.

    Raises
    ------
    SingularSample
        A sample is (numerically) singular.
    SamplingTooCoarse
        A principal-branch phase step reaches pi/2.
    """
    A = np.asarray(loop, dtype=complex)
    if A.ndim == 1:
        A = A.reshape(-1, 1, 1)
    ph = det_phases(A, gap_min)
    if closed:
        ph = np.concatenate([ph, ph[:1]])
    inc = phase_increments(ph)
    if inc.size and np.max(np.abs(inc)) >= PHASE_STEP_MAX:
        k = int(np.argmax(np.abs(inc)))
        raise SamplingTooCoarse(f"det phase step {inc[k]:.3f} at sample {k} reaches pi/2")
    total = 0.0
    for x in inc:  # fixed left-to-right reduction
        total += float(x)
    if not closed:
        return total
    return int(round(total / (2 * np.pi)))


def match_overlaps(V_prev: np.ndarray, V_next: np.ndarray) -> np.ndarray:
    """Maximal-overlap assignment of eigenvectors between two samples.

    Returns ``perm`` such that column ``perm[j]`` of `V_next` continues
    column ``j`` of `V_prev`.  Ties are broken by index through the
    deterministic assignment solver.
    """
    O = np.abs(V_prev.conj().T @ V_next) ** 2
    rows, cols = linear_sum_assignment(-O)
    perm = np.empty(len(rows), dtype=int)
    perm[rows] = cols
    return perm
