"""Lagrangians ``L(u)``, the interval operator spectrum, and Maslov indices.

A unitary ``u`` in ``M_n(A)`` determines the Lagrangian
``L(u) = {(a, u a)}`` in ``A^{2n}`` for the skew form ``<x, I y>``,
``I = diag(i, -i)``.  Frames used throughout:

* ``B(u) = [1; u] / sqrt(2)`` spans ``L(u)``,
* ``B_perp(u) = [-u*; 1] / sqrt(2)`` spans its orthogonal complement.

The pair index of a path of pairs ``(L(u0(t)), L(u1(t)))`` is the spectral
flow of the operator ``I d/dx`` on ``[0, 1]`` with boundary conditions
``f(0) in L(u0)``, ``f(1) in L(u1)``.  Its eigenvalues are the ``lambda``
with ``exp(2 i SIGMA_D lambda)`` in the spectrum of ``u0* u1``, so
the flow counts eigenphases of ``u0* u1`` passing through 1.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from . import _signs, matfun
from .algebra import AElement, KOneClass, KZeroClass
from .errors import (
    CrossCheckFailed,
    DegenerateForm,
    NotTransverse,
    NotUnitary,
    SamplingTooCoarse,
    ShapeMismatch,
    ThetaInconsistent,
    UnresolvedCrossing,
)
from .oppath import DEFAULT_GAP_MIN, DEFAULT_REFINE_MAX

UNITARY_RTOL = 1e-9
TOL_CROSS = 1e-8


def _check_unitary_stack(U, what="u"):
    m = U.shape[-1]
    defect = np.linalg.norm(np.swapaxes(U, -1, -2).conj() @ U - np.eye(m), 2, axis=(-2, -1))
    if np.any(defect > UNITARY_RTOL * (1 + m)):
        raise NotUnitary(f"{what} is not unitary (defect {defect.max():.2e})")


def frame(u: np.ndarray) -> np.ndarray:
    """``[1; u] / sqrt(2)``, an orthonormal frame of ``L(u)``."""
    m = u.shape[-1]
    eye = np.broadcast_to(np.eye(m), u.shape)
    return np.concatenate([eye, u], axis=-2) / np.sqrt(2)


def perp_frame(u: np.ndarray) -> np.ndarray:
    """``[-u*; 1] / sqrt(2)``, an orthonormal frame of ``L(u)^perp``."""
    m = u.shape[-1]
    eye = np.broadcast_to(np.eye(m), u.shape)
    return np.concatenate([-np.swapaxes(u, -1, -2).conj(), eye], axis=-2) / np.sqrt(2)


def symplectic_I(m: int) -> np.ndarray:
    return np.diag(np.concatenate([np.full(m, 1j), np.full(m, -1j)]))


def lagrangian_projection(u: np.ndarray) -> np.ndarray:
    """``(1/2) [[1, u*], [u, 1]]``, the projection onto ``L(u)``."""
    B = frame(u)
    return B @ np.swapaxes(B, -1, -2).conj()


@dataclass(frozen=True)
class Lagrangian:
    """``L(u)`` for a unitary element ``u`` of ``M_n(A)``."""

    u: AElement

    def __post_init__(self):
        for B in self.u.blocks:
            _check_unitary_stack(B)

    @property
    def shape(self):
        return self.u.shape

    @property
    def rank(self):
        return self.u.rank

    def projection(self) -> AElement:
        return AElement(self.shape, 2 * self.rank, tuple(lagrangian_projection(B) for B in self.u.blocks))


def _same_module(*Ls):
    for L in Ls[1:]:
        if L.shape != Ls[0].shape or L.rank != Ls[0].rank:
            raise ShapeMismatch("Lagrangians live in different modules")


def min_transversality(u0: np.ndarray, u1: np.ndarray) -> np.ndarray:
    """Smallest singular value of ``u0 - u1`` over the leading axes."""
    return np.linalg.svd(u0 - u1, compute_uv=False)[..., -1]


def transverse(L0: Lagrangian, L1: Lagrangian, margin: float = DEFAULT_GAP_MIN) -> bool:
    """True iff ``u0 - u1`` has smallest singular value >= `margin` everywhere."""
    _same_module(L0, L1)
    return all(float(min_transversality(a, b).min()) >= margin
               for a, b in zip(L0.u.blocks, L1.u.blocks))


def pair_unitary(L0: Lagrangian, L1: Lagrangian):
    """The unitary ``u0 u1*`` and its K1 class (theta winding of ``det``)."""
    _same_module(L0, L1)
    w = L0.u @ L1.u.adjoint()
    comps = [matfun.det_phase_winding(B, closed=True) if spec.is_loop else 0
             for spec, B in zip(L0.shape, w.blocks)]
    return w, KOneClass(L0.shape, tuple(comps))


def unitary_eigenphases(u) -> np.ndarray:
    """Eigenphases in ``(-pi, pi]`` of a unitary matrix (complex Schur form)."""
    T, _ = schur(matfun.as_matrix(u), output="complex")
    return np.angle(np.diag(T))


def interval_spectrum(u, window, sign=None) -> np.ndarray:
    """Eigenvalues of ``I d/dx`` on ``[0, 1]`` with boundary unitary `u` in `window`.

    Returns the sorted ``lambda`` in ``[lo, hi]`` with
    ``exp(2 i SIGMA_D lambda)`` an eigenvalue of `u`, with multiplicity.
    For the pair ``(L(u0), L(u1))`` pass ``u = u0* u1``.
    """
    sign = _signs.SIGMA_D if sign is None else sign
    lo, hi = float(window[0]), float(window[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
        raise ValueError("window must be a finite interval")
    out = []
    for th in unitary_eigenphases(u):
        base = sign * th / 2
        k0 = int(np.ceil((lo - base) / np.pi))
        k = k0
        while base + k * np.pi <= hi:
            out.append(base + k * np.pi)
            k += 1
    return np.sort(np.array(out))


# ------------------------------------------------------------- pair index

class LagrangianPath:
    """A sampled path of Lagrangian pairs ``(L(u0(t)), L(u1(t)))``.

    ``u0`` and ``u1`` are per-block arrays of shape ``(T, S, m, m)``.
    """

    def __init__(self, shape, rank, t, u0, u1):
        self.shape, self.rank = shape, int(rank)
        self.t = np.asarray(t, dtype=float)
        if abs(self.t[0]) > 1e-12 or abs(self.t[-1] - 1) > 1e-12 or np.any(np.diff(self.t) <= 0):
            raise ValueError("t grid must increase strictly from 0 to 1")
        self.u0 = tuple(self._check(B, spec) for B, spec in zip(u0, shape))
        self.u1 = tuple(self._check(B, spec) for B, spec in zip(u1, shape))
        if len(self.u0) != len(shape) or len(self.u1) != len(shape):
            raise ShapeMismatch("one array per block required")

    def _check(self, B, spec):
        B = np.asarray(B, dtype=complex)
        m = spec.dim * self.rank
        want = (self.t.size, spec.theta_samples, m, m)
        if B.shape == (self.t.size, m, m) and not spec.is_loop:
            B = B.reshape(want)
        if B.shape != want:
            raise ShapeMismatch(f"unitary path block shape {B.shape}, expected {want}")
        _check_unitary_stack(B)
        return B

    @classmethod
    def from_curves(cls, c0, c1):
        return cls(c0.shape, c0.rank, c0.t, c0.blocks, c1.blocks)

    def endpoint(self, which: int, i: int) -> Lagrangian:
        src = self.u0 if which == 0 else self.u1
        return Lagrangian(AElement(self.shape, self.rank, tuple(B[i] for B in src)))

    def swapped(self) -> "LagrangianPath":
        return LagrangianPath(self.shape, self.rank, self.t, self.u1, self.u0)

    def apply(self, hom) -> "LagrangianPath":
        return LagrangianPath(hom.target(self.shape), self.rank, self.t,
                              hom.apply_blocks(self.shape, self.u0, self.rank),
                              hom.apply_blocks(self.shape, self.u1, self.rank))

    def is_closed(self, atol=1e-10) -> bool:
        return all(np.allclose(B[0], B[-1], atol=atol, rtol=0) for B in self.u0 + self.u1)


@dataclass
class LagrangianCurve:
    """A single sampled path of unitaries ``u(t)`` (per-block ``(T, S, m, m)``)."""

    shape: object
    rank: int
    t: np.ndarray
    blocks: tuple


def _polar(A):
    U, _, Vh = np.linalg.svd(A)
    return U @ Vh


def _unitary_interp(A, B, s):
    return _polar((1 - s) * A + s * B)


def _phase_data(w):
    T, Z = schur(w, output="complex")
    return np.angle(np.diag(T)), Z


def _resolve_pair_points(t, U0, U1, tol, refine_max):
    """Evaluation points of ``w = u0* u1`` avoiding eigenphases within `tol` of 0."""
    def w_at(A, B):
        return A.conj().T @ B

    ts, ws = [t[0]], [w_at(U0[0], U1[0])]
    for i in range(1, len(t) - 1):
        w = w_at(U0[i], U1[i])
        if np.min(np.abs(_phase_data(w)[0])) > tol:
            ts.append(t[i])
            ws.append(w)
            continue
        h = 0.5
        for _ in range(refine_max):
            left = w_at(_unitary_interp(U0[i], U0[i - 1], h), _unitary_interp(U1[i], U1[i - 1], h))
            right = w_at(_unitary_interp(U0[i], U0[i + 1], h), _unitary_interp(U1[i], U1[i + 1], h))
            if min(np.abs(_phase_data(left)[0]).min(), np.abs(_phase_data(right)[0]).min()) > tol:
                ts += [t[i] - h * (t[i] - t[i - 1]), t[i] + h * (t[i + 1] - t[i])]
                ws += [left, right]
                break
            h *= 0.5
        else:
            raise UnresolvedCrossing(f"eigenphase of u0*u1 stuck at 1 near t={t[i]:g}")
    ts.append(t[-1])
    ws.append(w_at(U0[-1], U1[-1]))
    return np.array(ts), np.array(ws)


def _track_passes(ts, ws):
    """Net counterclockwise passes of the eigenphases of `ws` through 1.

    Eigenvectors are matched by maximal overlap and phases unwrapped per
    curve; the det-lift count is computed alongside as a cross-check.
    """
    phases, vecs = zip(*(_phase_data(w) for w in ws))
    m = len(phases[0])
    idx = np.arange(m)
    cur = np.mod(phases[0], 2 * np.pi)  # in [0, 2 pi)
    start = cur.copy()
    crossings = []
    for i in range(len(ts) - 1):
        perm = matfun.match_overlaps(vecs[i], vecs[i + 1])
        nxt = perm[idx]
        inc = np.angle(np.exp(1j * (phases[i + 1][nxt] - phases[i][idx])))
        if np.max(np.abs(inc)) >= matfun.PHASE_STEP_MAX:
            raise SamplingTooCoarse(f"eigenphase step {np.max(np.abs(inc)):.3f} near t={ts[i]:g}")
        new = cur + inc
        jumps = np.floor(new / (2 * np.pi)) - np.floor(cur / (2 * np.pi))
        for c in np.flatnonzero(jumps):
            d = int(jumps[c])
            level = 2 * np.pi * np.floor(max(cur[c], new[c]) / (2 * np.pi))
            s = (level - cur[c]) / (new[c] - cur[c])
            crossings.append({"t": float(ts[i] + s * (ts[i + 1] - ts[i])), "direction": d, "curve": int(c)})
        cur = new
        idx = nxt
    net = int(np.sum(np.floor(cur / (2 * np.pi)) - np.floor(start / (2 * np.pi))))

    det_ph = np.array([np.linalg.slogdet(w)[0] for w in ws])
    det_inc = matfun.phase_increments(det_ph)
    if det_inc.size and np.max(np.abs(det_inc)) >= matfun.PHASE_STEP_MAX:
        raise SamplingTooCoarse("det phase step of u0*u1 reached pi/2")
    psi0 = np.mod(phases[0], 2 * np.pi)
    psi1 = np.mod(phases[-1], 2 * np.pi)
    det_count = (float(np.sum(det_inc)) - psi1.sum() + psi0.sum()) / (2 * np.pi)
    if abs(det_count - net) > 1e-6:
        raise UnresolvedCrossing(f"eigenphase tracking ({net}) disagrees with det lift ({det_count:.6f})")
    return net, crossings


def maslov_pair(lp: LagrangianPath, margin=DEFAULT_GAP_MIN, refine_max=DEFAULT_REFINE_MAX,
                tol_zero=1e-8, sign=None):
    """Maslov index of a path of Lagrangian pairs.

    Returns ``(KZeroClass, diagnostics)``.  The value per block is
    ``SIGMA_M`` times the net number of counterclockwise passes of the
    eigenphases of ``u0* u1`` through 1; on loop blocks it must not depend
    on theta.  For closed paths it is compared with the winding of
    ``det(u1 u0*)``.

    Raises
    ------
    NotTransverse
        The pair is not transverse (margin `margin`) at ``t = 0`` or ``t = 1``.
    """
    sign = _signs.SIGMA_M if sign is None else sign
    for i in (0, lp.t.size - 1):
        for A, B in zip(lp.u0, lp.u1):
            if float(min_transversality(A[i], B[i]).min()) < margin:
                raise NotTransverse(f"pair not transverse at t={lp.t[i]:g}")
    comps, crossings, loop_windings = [], [], []
    for b, (A, B) in enumerate(zip(lp.u0, lp.u1)):
        nets = []
        for s in range(A.shape[1]):
            ts, ws = _resolve_pair_points(lp.t, A[:, s], B[:, s], tol_zero, refine_max)
            net, cr = _track_passes(ts, ws)
            nets.append(net)
            crossings += [dict(c, block=b, theta_index=s) for c in cr]
        vals = set(nets)
        if len(vals) != 1:
            raise ThetaInconsistent(f"Maslov count varies with theta on block {b}: {sorted(vals)}")
        comps.append(sign * vals.pop())
    if lp.is_closed():
        for b, (A, B) in enumerate(zip(lp.u0, lp.u1)):
            w = [matfun.det_phase_winding(B[:-1, s] @ np.swapaxes(A[:-1, s], -1, -2).conj())
                 for s in range(A.shape[1])]
            loop_windings.append(w[0])
            if any(x != comps[b] for x in w):
                raise CrossCheckFailed(f"closed-loop Maslov index {comps[b]} != det winding {w[0]}")
    crossings.sort(key=lambda c: (c["t"], c["block"], c["theta_index"], c["curve"]))
    diag = {"crossings": crossings, "sign": sign}
    if loop_windings:
        diag["loop_det_windings"] = loop_windings
    return KZeroClass(lp.shape, tuple(comps)), diag


# ----------------------------------------------------------- triple index

def triple_forms(u0, u1, u2):
    """Gram matrices of ``h(v, w) = <v_2, I w_1>`` on ``L(u0)`` computed two ways.

    ``v = v_1 + v_2`` is the decomposition of ``v in L(u0)`` along
    ``L(u1) + L(u2)``.

    Returns
    -------
    H_a : ndarray
        From solving ``[B1 B2] c = B0`` in the frames ``B_i = B(u_i)``.
    H_b : ndarray
        From ``B0* P0 (P1+P2)^-1 P2 I P1 (P1+P2)^-1 P0 B0``.
    """
    m = u0.shape[-1]
    I = symplectic_I(m)
    B0, B1, B2 = frame(u0), frame(u1), frame(u2)
    c = np.linalg.solve(np.hstack([B1, B2]), B0)
    V1, V2 = B1 @ c[:m], B2 @ c[m:]
    H_a = V2.conj().T @ I @ V1
    P0, P1, P2 = (B @ B.conj().T for B in (B0, B1, B2))
    S = np.linalg.inv(P1 + P2)
    H_b = B0.conj().T @ P0 @ S @ P2 @ I @ P1 @ S @ P0 @ B0
    return H_a, H_b


def maslov_triple(L0: Lagrangian, L1: Lagrangian, L2: Lagrangian, margin=DEFAULT_GAP_MIN,
                  tol_cross=TOL_CROSS):
    """Triple index: ``n_+ - n_-`` of the form ``h`` on ``L0``, per block.

    Returns ``(KZeroClass, diagnostics)``.

    Raises
    ------
    NotTransverse, DegenerateForm, CrossCheckFailed
    """
    _same_module(L0, L1, L2)
    for X, Y in ((L0, L1), (L1, L2), (L2, L0)):
        if not transverse(X, Y, margin):
            raise NotTransverse("triple is not pairwise transverse")
    comps = []
    worst_cross, worst_herm = 0.0, 0.0
    for b, (A0, A1, A2) in enumerate(zip(L0.u.blocks, L1.u.blocks, L2.u.blocks)):
        taus = []
        for s in range(A0.shape[0]):
            H_a, H_b = triple_forms(A0[s], A1[s], A2[s])
            cross = float(np.linalg.norm(H_a - H_b, 2))
            herm = float(np.linalg.norm(H_a - H_a.conj().T, 2))
            worst_cross, worst_herm = max(worst_cross, cross), max(worst_herm, herm)
            if cross > tol_cross:
                raise CrossCheckFailed(f"triple form routes differ by {cross:.2e}")
            if herm > matfun.tol_herm(H_a) * 10:
                raise CrossCheckFailed(f"triple form is not hermitian (defect {herm:.2e})")
            n_plus, n_minus, n_zero = matfun.signature(H_a, matfun.tol_zero(H_a))
            if n_zero:
                raise DegenerateForm(f"triple form degenerate on block {b}")
            taus.append(n_plus - n_minus)
        if len(set(taus)) != 1:
            raise ThetaInconsistent(f"triple index varies with theta on block {b}")
        comps.append(taus[0])
    return KZeroClass(L0.shape, tuple(comps)), {"route_difference": worst_cross,
                                                 "hermiticity_defect": worst_herm}


def triple_pair_identity(c0: LagrangianCurve, c1: LagrangianCurve, c2: LagrangianCurve,
                         margin=DEFAULT_GAP_MIN) -> dict:
    """Evaluate both sides of ``tau(1) - tau(0) = 2 (mu01 + mu12 + mu20)``."""
    curves = (c0, c1, c2)

    def at(c, i):
        return Lagrangian(AElement(c.shape, c.rank, tuple(B[i] for B in c.blocks)))

    tau0 = maslov_triple(*(at(c, 0) for c in curves), margin=margin)[0]
    tau1 = maslov_triple(*(at(c, -1) for c in curves), margin=margin)[0]
    mus = [maslov_pair(LagrangianPath.from_curves(curves[i], curves[(i + 1) % 3]), margin)[0]
           for i in range(3)]
    lhs = tau1 - tau0
    total = mus[0] + mus[1] + mus[2]
    rhs = total + total
    return {
        "tau0": list(tau0.components), "tau1": list(tau1.components),
        "mu01": list(mus[0].components), "mu12": list(mus[1].components),
        "mu20": list(mus[2].components),
        "lhs": list(lhs.components), "rhs": list(rhs.components),
        "equal": lhs == rhs,
    }
