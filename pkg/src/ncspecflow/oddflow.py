"""Odd (graded) spectral flow, odd relative index and the suspension checks.

Every block of a graded object has even size ``2k`` with grading
``sigma = diag(1_k, -1_k)``.  Odd hermitian samples have the form
``[[0, W*], [W, 0]]`` and Lagrangian projections the form
``(1/2) [[1, u*], [u, 1]]`` with ``u`` unitary.

The odd flow is computed in closed form as the difference of the theta
windings of ``det W`` at the endpoints.  Two independent realizations of
the Bott map check it:

* even -> odd: the winding of ``det(D_t - i cos(pi x))`` around the
  boundary of the unit square;
* odd -> even: discrete Chern numbers of the negative spectral projections
  of ``D_i + sigma cos(pi x)`` over the cylinder ``S^1 x [0, 1]``.
"""

from dataclasses import dataclass

import numpy as np

from . import _signs, matfun
from .algebra import AElement, AlgebraShape, BlockSpec, KOneClass
from .errors import (
    CrossCheckFailed,
    GaplessSuspension,
    KernelRankJump,
    NotAlmostInvolution,
    NotLagrangian,
    NotOdd,
    RankJump,
    SamplingTooCoarse,
    ShapeMismatch,
    SingularEndpoint,
)
from .maslov import Lagrangian, pair_unitary
from .oppath import DEFAULT_GAP_MIN, DEFAULT_REFINE_MAX, HermPath
from .relindex import projection_frames

ODD_RTOL = 1e-9
UNITARY_RTOL = 1e-8
CHERN_GRID = 64
CHERN_GRID_MAX = 512
ALMOST_INVOLUTION_TOL = 0.1


def _half(m):
    if m % 2:
        raise NotOdd(f"graded block size {m} is odd")
    return m // 2


def grading(m: int) -> np.ndarray:
    k = _half(m)
    return np.diag(np.concatenate([np.ones(k), -np.ones(k)]))


def odd_from_W(W: np.ndarray) -> np.ndarray:
    """``[[0, W*], [W, 0]]`` over the leading axes."""
    k = W.shape[-1]
    out = np.zeros(W.shape[:-2] + (2 * k, 2 * k), dtype=complex)
    out[..., :k, k:] = np.swapaxes(W, -1, -2).conj()
    out[..., k:, :k] = W
    return out


def _check_odd(B, what="sample"):
    k = _half(B.shape[-1])
    even = np.concatenate([B[..., :k, :k].reshape(-1), B[..., k:, k:].reshape(-1)])
    scale = 1 + np.abs(B).max(initial=0.0)
    if even.size and np.abs(even).max() > ODD_RTOL * scale:
        raise NotOdd(f"{what} does not anticommute with the grading")


# ------------------------------------------------------------- graded path

class GradedHermPath:
    """Odd hermitian path; ``W(b)`` is the lower-left block, shape ``(T, S, k, k)``."""

    def __init__(self, path: HermPath):
        for B in path.blocks:
            _check_odd(B, "path sample")
        self.path = path

    @classmethod
    def from_W(cls, shape, rank, t, W_blocks):
        return cls(HermPath(shape, rank, t, [odd_from_W(np.asarray(W, dtype=complex))
                                             for W in W_blocks]))

    @property
    def shape(self):
        return self.path.shape

    @property
    def rank(self):
        return self.path.rank

    @property
    def t(self):
        return self.path.t

    def W(self, b: int) -> np.ndarray:
        B = self.path.blocks[b]
        k = B.shape[-1] // 2
        return B[..., k:, :k]

    def map_samples(self, f) -> "GradedHermPath":
        """Apply an odd function of the samples (normalizing invariance)."""
        from .oppath import normalizing_transform

        return GradedHermPath(normalizing_transform(self.path, f))


# --------------------------------------------------- Lagrangian projections

@dataclass(frozen=True)
class LagrangianProjection:
    """Projection ``P`` with ``2P - 1`` odd; ``u`` is its unitary."""

    P: AElement

    def __post_init__(self):
        for B in self.P.blocks:
            projection_frames(B, "P")
            m = B.shape[-1]
            if m % 2:
                raise NotLagrangian("block size must be even")
            k = m // 2
            F = 2 * B - np.eye(m)
            try:
                _check_odd(F, "2P - 1")
            except NotOdd as exc:
                raise NotLagrangian(str(exc)) from None
            u = 2 * B[..., k:, :k]
            defect = np.linalg.norm(np.swapaxes(u, -1, -2).conj() @ u - np.eye(k), 2, axis=(-2, -1))
            if np.any(defect > UNITARY_RTOL * (1 + k)):
                raise NotLagrangian(f"off-diagonal block is not unitary (defect {defect.max():.2e})")

    @classmethod
    def from_unitary(cls, u: AElement) -> "LagrangianProjection":
        blocks = []
        for B in u.blocks:
            k = B.shape[-1]
            eye = np.broadcast_to(np.eye(k), B.shape)
            top = np.concatenate([eye, np.swapaxes(B, -1, -2).conj()], axis=-1)
            bottom = np.concatenate([B, eye], axis=-1)
            blocks.append(0.5 * np.concatenate([top, bottom], axis=-2))
        return cls(AElement(u.shape, 2 * u.rank, tuple(blocks)))

    @property
    def shape(self):
        return self.P.shape

    def unitary_blocks(self):
        out = []
        for B in self.P.blocks:
            k = B.shape[-1] // 2
            out.append(2 * B[..., k:, :k])
        return out


def odd_rel_index(P: LagrangianProjection, Q: LagrangianProjection) -> KOneClass:
    """Theta winding of ``det(u_P u_Q*)`` per loop block (0 on scalar blocks)."""
    if P.shape != Q.shape or P.P.rank != Q.P.rank:
        raise ShapeMismatch("projections live over different modules")
    comps = []
    for spec, uP, uQ in zip(P.shape, P.unitary_blocks(), Q.unitary_blocks()):
        if spec.is_loop:
            comps.append(matfun.det_phase_winding(uP @ np.swapaxes(uQ, -1, -2).conj()))
        else:
            comps.append(0)
    return KOneClass(P.shape, tuple(comps))


def odd_spectral_flow(g: GradedHermPath, gap_min=DEFAULT_GAP_MIN) -> KOneClass:
    """Odd spectral flow: ``wind det W(1) - wind det W(0)`` per loop block.

    Raises
    ------
    SingularEndpoint
        ``W(0)`` or ``W(1)`` has a singular value below `gap_min`.
    """
    comps = []
    for b, spec in enumerate(g.shape):
        W = g.W(b)
        for i in (0, -1):
            smin = np.linalg.svd(W[i], compute_uv=False)[..., -1].min()
            if smin < gap_min:
                raise SingularEndpoint(f"endpoint W({'01'[i]}) singular on block {b}")
        if spec.is_loop:
            comps.append(matfun.det_phase_winding(W[-1]) - matfun.det_phase_winding(W[0]))
        else:
            comps.append(0)
    return KOneClass(g.shape, tuple(comps))


# ------------------------------------------------------ even -> odd check

def _edge_phase(stack_fn, n, cert_fn, refine_max):
    """Accumulated det phase of ``stack_fn(s)`` for ``s`` from 0 to 1.

    `cert_fn(n)` certifies that `n` uniform steps keep every det phase
    step below pi/2; otherwise the grid is doubled up to `refine_max` times.
    """
    for _ in range(refine_max + 1):
        if cert_fn(n):
            s = np.linspace(0, 1, n + 1)
            ph = np.linalg.slogdet(stack_fn(s))[0]
            inc = matfun.phase_increments(ph)
            if np.max(np.abs(inc)) >= matfun.PHASE_STEP_MAX:  # certificate is sufficient, so unreachable
                raise SamplingTooCoarse("det phase step reached pi/2 on a certified edge")
            return float(np.sum(inc))
        n *= 2
    raise SamplingTooCoarse(f"edge needs more than {n // 2} steps")


def boundary_square_winding(p: HermPath, x_samples=64, gap_min=DEFAULT_GAP_MIN,
                            refine_max=DEFAULT_REFINE_MAX):
    """Raw winding of ``det(D_t - i cos(pi x))`` around the unit square, per block.

    The boundary is traversed counterclockwise in the ``(t, x)`` plane:
    ``x = 0`` with ``t`` increasing, ``t = 1`` with ``x`` increasing,
    ``x = 1`` with ``t`` decreasing, ``t = 0`` with ``x`` decreasing.
    Between samples ``D_t`` is linearly interpolated.
    """
    out = []
    for b, spec in enumerate(p.shape):
        if spec.is_loop:
            raise ShapeMismatch("even-to-odd suspension takes scalar blocks only")
        D = p.blocks[b][:, 0]
        m = D.shape[-1]
        eye = np.eye(m)
        gaps = [np.abs(np.linalg.eigvalsh(D[i])).min() for i in (0, -1)]
        if min(gaps) < gap_min:
            raise SingularEndpoint(f"endpoint singular on block {b}")

        def t_edge(c):
            total = 0.0
            for i in range(len(p.t) - 1):
                A, B = D[i], D[i + 1]
                step = np.linalg.norm(B - A, 2)
                # each eigenvalue of D - i c moves its phase by at most |dD| / |c|
                total += _edge_phase(lambda s: A[None] + s[:, None, None] * (B - A)[None] - 1j * c * eye,
                                     1, lambda n: m * step / n < matfun.PHASE_STEP_MAX, refine_max)
            return total

        def x_edge(Dfix, gap):
            # each eigenvalue phase of D - i cos(pi x) moves at most pi dx / gap
            fn = lambda s: Dfix[None] - 1j * np.cos(np.pi * s)[:, None, None] * eye
            n = max(int(x_samples), int(2 * m / gap) + 1)
            return _edge_phase(fn, n, lambda n: m * np.pi / (n * gap) < matfun.PHASE_STEP_MAX, 0)

        total = t_edge(1.0)                # x = 0, t: 0 -> 1
        total += x_edge(D[-1], gaps[1])    # t = 1, x: 0 -> 1
        total -= t_edge(-1.0)              # x = 1, t: 1 -> 0
        total -= x_edge(D[0], gaps[0])     # t = 0, x: 1 -> 0
        w = total / (2 * np.pi)
        if abs(w - round(w)) > 1e-6:
            raise SamplingTooCoarse(f"boundary winding {w:.6f} is not an integer")
        out.append(int(round(w)))
    return out


def suspend_even_to_odd(p: HermPath, x_samples=64, gap_min=DEFAULT_GAP_MIN, sign=None) -> dict:
    """Check ``SIGMA_S * (boundary-square winding) == spectral flow`` per block.

    Raises
    ------
    CrossCheckFailed
        The two sides differ.
    """
    from .specflow import spectral_flow

    sign = _signs.SIGMA_S if sign is None else sign
    raw = boundary_square_winding(p, x_samples, gap_min)
    flow = list(spectral_flow(p, gap_min=gap_min).value.components)
    suspended = [sign * w for w in raw]
    if suspended != flow:
        raise CrossCheckFailed(f"suspended winding {suspended} != spectral flow {flow}")
    return {"boundary_winding": raw, "sign": sign, "suspended": suspended,
            "spectral_flow": flow, "equal": True}


# ------------------------------------------------------ odd -> even check

def _psd_function(A, f):
    w, V = np.linalg.eigh(A)
    w = np.clip(w, 0.0, None)
    return (V * f(w)[..., None, :]) @ np.swapaxes(V, -1, -2).conj()


def _c_fun(x):
    return np.sqrt(0.5 * (1 + 1 / np.sqrt(1 + x)))


def _g_fun(x):
    # sin(phi/2) / sqrt(x) with tan(phi) = sqrt(x); equals 1/2 at x = 0
    r = np.sqrt(1 + x)
    return np.sqrt(1 / (2 * (r + 1) * r))


def canonical_frames(W: np.ndarray, end: int) -> np.ndarray:
    """Negative eigenframes of ``[[0, W*], [W, 0]] + sigma`` (end 0) or ``- sigma`` (end 1).

    The frames are the end of the parallel homotopy ``(1 - s) D + sigma``
    from the constant frame of ``-/+ sigma``, so they fix the boundary gauge.
    """
    WH = np.swapaxes(W, -1, -2).conj()
    A, B = WH @ W, W @ WH
    if end == 0:
        top = -_psd_function(A, _g_fun) @ WH
        bottom = _psd_function(B, _c_fun)
    else:
        top = _psd_function(A, _c_fun)
        bottom = -_psd_function(B, _g_fun) @ W
    return np.concatenate([top, bottom], axis=-2)


def _link(Fa, Fb):
    z = np.linalg.det(np.swapaxes(Fa, -1, -2).conj() @ Fb)
    a = np.abs(z)
    if np.any(a < 1e-8):
        raise SamplingTooCoarse("frame overlap is singular; refine the grid")
    return z / a


def chern_from_frames(frames: np.ndarray) -> int:
    """Discrete Chern number of frames on a ``(N_theta, N_x)`` grid.

    Theta is periodic; the last ``x`` column is joined to the first by a
    seam whose links are 1 (both boundary columns carry a trivialized gauge).
    Plaquettes are oriented so that the frames ``exp(i theta x) v`` give +1.

    Raises
    ------
    SamplingTooCoarse
        Some plaquette phase reaches pi/2.
    """
    Ut = _link(frames, np.roll(frames, -1, axis=0))            # (Nt, Nx)
    Ux = np.ones(frames.shape[:2], dtype=complex)
    Ux[:, :-1] = _link(frames[:, :-1], frames[:, 1:])
    plaq = Ut * np.roll(Ux, -1, axis=0) * np.roll(Ut, -1, axis=1).conj() * Ux.conj()
    F = np.angle(plaq)
    if np.max(np.abs(F)) >= matfun.PHASE_STEP_MAX:
        raise SamplingTooCoarse(f"plaquette phase {np.max(np.abs(F)):.3f} reaches pi/2")
    total = 0.0
    for x in F.reshape(-1):  # fixed reduction order
        total += float(x)
    c = total / (2 * np.pi)
    if abs(c - round(c)) > 1e-6:
        raise SamplingTooCoarse(f"Chern sum {c:.6f} is not an integer")
    return int(round(c))


def bott_beta_cylinder(P: np.ndarray, frame0: np.ndarray, frame1: np.ndarray) -> int:
    """Chern number of a projection family on ``S^1 x [0, 1]`` with fixed boundary gauge.

    Parameters
    ----------
    P : ndarray, shape (N_theta, N_x, n, n)
        Projections on the grid; ``x`` runs from 0 to 1 inclusive.
    frame0, frame1 : ndarray, shape (N_theta, n, r)
        Orthonormal frames of ``P[:, 0]`` and ``P[:, -1]`` fixing the gauge.
    """
    P = np.asarray(P, dtype=complex)
    Nt, Nx = P.shape[:2]
    w, V = np.linalg.eigh(0.5 * (P + np.swapaxes(P, -1, -2).conj()))
    ranks = (w > 0.5).sum(axis=-1)
    r = frame0.shape[-1]
    if np.any(ranks != r) or frame1.shape[-1] != r:
        raise RankJump("projection family changes rank")
    frames = V[..., -r:] if r else V[..., :0]
    frames = frames.copy()
    frames[:, 0] = frame0
    frames[:, -1] = frame1
    return chern_from_frames(frames)


def _negative_frames(W, x, gap_min):
    """Negative eigenframes of ``D + sigma cos(pi x)`` on a ``(theta, x)`` grid."""
    D = odd_from_W(W)
    m = D.shape[-1]
    k = m // 2
    sig = grading(m)
    H = D[:, None] + np.cos(np.pi * x)[None, :, None, None] * sig
    w, V = np.linalg.eigh(H)
    if np.min(np.abs(w)) < gap_min:
        raise GaplessSuspension("suspended family is not invertible")
    frames = V[..., :k].copy()
    frames[:, 0] = canonical_frames(W, 0)
    frames[:, -1] = canonical_frames(W, 1)
    return frames


def cylinder_chern(W: np.ndarray, x_samples=CHERN_GRID, gap_min=DEFAULT_GAP_MIN) -> tuple:
    """Chern number of ``1_{<0}(D + sigma cos(pi x))`` for ``D = [[0, W*], [W, 0]]``.

    The ``x`` grid doubles from `x_samples` up to ``CHERN_GRID_MAX`` until
    every plaquette phase is below pi/2.  Returns ``(chern, x_samples_used)``.
    """
    n = int(x_samples)
    while True:
        x = np.linspace(0, 1, n + 1)
        try:
            return chern_from_frames(_negative_frames(W, x, gap_min)), n
        except SamplingTooCoarse:
            if n >= CHERN_GRID_MAX:
                raise
            n *= 2


def suspend_odd_to_even(g: GradedHermPath, x_samples=CHERN_GRID, gap_min=DEFAULT_GAP_MIN,
                        sign=None) -> dict:
    """Check ``SIGMA_C * (C_0 - C_1) == odd spectral flow`` per loop block.

    ``C_i`` is the cylinder Chern number of the endpoint ``D_i``.

    Raises
    ------
    CrossCheckFailed
        The two sides differ.
    """
    sign = _signs.SIGMA_C if sign is None else sign
    flow = list(odd_spectral_flow(g, gap_min).components)
    c0s, c1s, grids = [], [], []
    for b, spec in enumerate(g.shape):
        if not spec.is_loop:
            c0s.append(0)
            c1s.append(0)
            grids.append(0)
            continue
        W = g.W(b)
        c0, n0 = cylinder_chern(W[0], x_samples, gap_min)
        c1, n1 = cylinder_chern(W[-1], x_samples, gap_min)
        c0s.append(c0)
        c1s.append(c1)
        grids.append(max(n0, n1))
    suspended = [sign * (a - b) for a, b in zip(c0s, c1s)]
    if suspended != flow:
        raise CrossCheckFailed(f"suspended Chern difference {suspended} != odd flow {flow}")
    return {"chern0": c0s, "chern1": c1s, "sign": sign, "suspended": suspended,
            "odd_flow": flow, "x_samples": grids, "equal": True}


# ------------------------------------------------------ bounded suspension

def suspend_bounded(F: AElement, t_samples=65) -> GradedHermPath:
    """Graded path with ``W_t = cos(pi t) + i sin(pi t) F``.

    Raises
    ------
    NotAlmostInvolution
        ``||F^2 - 1|| > 0.1`` or ``F`` is not hermitian.
    """
    blocks = []
    t = np.linspace(0, 1, t_samples)
    for B in F.blocks:
        m = B.shape[-1]
        if np.linalg.norm(B - np.swapaxes(B, -1, -2).conj(), 2, axis=(-2, -1)).max() > matfun.tol_herm(B[0]) * 10:
            raise NotAlmostInvolution("F is not hermitian")
        if np.linalg.norm(B @ B - np.eye(m), 2, axis=(-2, -1)).max() > ALMOST_INVOLUTION_TOL:
            raise NotAlmostInvolution("||F^2 - 1|| exceeds 0.1")
        W = np.cos(np.pi * t)[:, None, None, None] * np.eye(m) \
            + 1j * np.sin(np.pi * t)[:, None, None, None] * B[None]
        blocks.append(odd_from_W(W))
    return GradedHermPath(HermPath(F.shape, 2 * F.rank, t, blocks))


def exp_involution_winding(F: AElement) -> KOneClass:
    """Theta winding of ``det exp(pi i (F + 1))`` per loop block."""
    comps = []
    for spec, B in zip(F.shape, F.blocks):
        if not spec.is_loop:
            comps.append(0)
            continue
        U = np.array([matfun.functional_calculus(X, lambda w: np.exp(1j * np.pi * (w + 1))) for X in B])
        comps.append(matfun.det_phase_winding(U))
    return KOneClass(F.shape, tuple(comps))


def suspend_bounded_check(F: AElement, t_samples=65) -> dict:
    """Compare the odd flow of :func:`suspend_bounded` with the winding of ``exp(pi i (F + 1))``.

    At finite truncation both sides vanish identically: ``det exp(pi i (F+1))
    = exp(pi i tr(F+1))`` has a real periodic exponent, and the suspended
    path runs from ``W = 1`` to ``W = -1``.  The check still evaluates both
    independently.
    """
    g = suspend_bounded(F, t_samples)
    flow = odd_spectral_flow(g)
    expw = exp_involution_winding(F)
    if flow != expw:
        raise CrossCheckFailed(f"suspended flow {flow.components} != exp winding {expw.components}")
    return {"odd_flow": list(flow.components), "exp_winding": list(expw.components), "equal": True}


# ----------------------------------------------------- splitting correction

def kernel_frames(D: np.ndarray, rank: int, tol=1e-8):
    """Even and odd kernel frames of odd hermitian samples ``D`` (``(S, n, n)``).

    The gauge is fixed by projecting a reference frame ``R`` (the first
    columns of the identity in each graded half, chosen at the first sample)
    and orthonormalizing, ``A = Pi R (R* Pi R)^{-1/2}``, so the frames are
    smooth and periodic in theta.

    Raises
    ------
    KernelRankJump
        The kernel rank is not ``2 * rank`` at every sample, or the
        reference frame degenerates.
    """
    n = D.shape[-1]
    k = n // 2
    W = D[..., k:, :k]
    out = []
    for half, M in ((0, np.swapaxes(W, -1, -2).conj() @ W), (1, W @ np.swapaxes(W, -1, -2).conj())):
        w, V = np.linalg.eigh(M)
        scale = 1 + np.abs(w).max()
        nk = (w < tol * scale).sum(axis=-1)
        if np.any(nk != rank):
            raise KernelRankJump(f"kernel rank varies: {sorted(set(nk.tolist()))}")
        Pi = V[..., :rank] @ np.swapaxes(V[..., :rank], -1, -2).conj()
        # reference: the `rank` coordinates best represented in the kernel at theta_0
        ref = np.argsort(-np.real(np.diagonal(Pi[0])))[:rank]
        R = np.eye(k)[:, np.sort(ref)]
        G = np.swapaxes(R, -1, -2) @ Pi @ R
        gw, gV = np.linalg.eigh(G)
        if np.min(gw) < 1e-3:
            raise KernelRankJump("kernel reference frame degenerates")
        inv_sqrt = (gV / np.sqrt(gw)[..., None, :]) @ np.swapaxes(gV, -1, -2).conj()
        A = Pi @ R @ inv_sqrt
        full = np.zeros(D.shape[:-2] + (n, rank), dtype=complex)
        if half == 0:
            full[..., :k, :] = A
        else:
            full[..., k:, :] = A
        out.append(full)
    return out[0], out[1]


def splitting_projections(D: AElement, L0: AElement, L1: AElement, kernel_rank: int):
    """``P_i = 1_{>0}(D) + P_{L_i}`` for kernel Lagrangians given by projections ``L_i``.

    Returns ``(P0, P1, u0, u1)`` where ``u_i`` are the kernel unitaries of
    ``L_i`` in the kernel frames of :func:`kernel_frames`.
    """
    Ps, us = [[], []], [[], []]
    for b, B in enumerate(D.blocks):
        _check_odd(B, "D")
        E, O = kernel_frames(B, kernel_rank)
        w, V = np.linalg.eigh(B)
        positive = w > 1e-8 * (1 + np.abs(w).max())
        Ppos = (V * positive[..., None, :]) @ np.swapaxes(V, -1, -2).conj()
        for i, L in enumerate((L0, L1)):
            PL = L.blocks[b]
            u = 2 * np.swapaxes(O, -1, -2).conj() @ PL @ E
            defect = np.linalg.norm(np.swapaxes(u, -1, -2).conj() @ u - np.eye(kernel_rank), 2, axis=(-2, -1))
            if np.any(defect > 1e-6):
                raise NotLagrangian("L is not a Lagrangian of the kernel")
            Ps[i].append(Ppos + PL)
            us[i].append(u)
    mk = lambda bl, rank: AElement(D.shape, rank, tuple(bl))
    P0 = LagrangianProjection(mk(Ps[0], D.rank))
    P1 = LagrangianProjection(mk(Ps[1], D.rank))
    return P0, P1, us[0], us[1]


def splitting_correction_check(D: AElement, L0: AElement, L1: AElement, kernel_rank: int) -> dict:
    """Check ``odd_rel_index(P0, P1)`` against the loop class of the kernel pair ``(L0, L1)``.

    The right side is :func:`maslov.pair_unitary` of the kernel unitaries,
    i.e. the theta winding of ``det(u0 u1*)``.  The closed-loop Maslov index
    of the same pair is the negative of this value.
    """
    P0, P1, u0, u1 = splitting_projections(D, L0, L1, kernel_rank)
    lhs = odd_rel_index(P0, P1)
    # kernel unitaries are kernel_rank x kernel_rank on every block
    kshape = AlgebraShape(tuple(BlockSpec(s.kind, 1, s.theta_samples) for s in D.shape))
    La = Lagrangian(AElement(kshape, kernel_rank, tuple(u0)))
    Lb = Lagrangian(AElement(kshape, kernel_rank, tuple(u1)))
    _, cls = pair_unitary(La, Lb)
    rhs = list(cls.components)
    if list(lhs.components) != rhs:
        raise CrossCheckFailed(f"odd relative index {lhs.components} != kernel pair class {rhs}")
    return {"odd_rel_index": list(lhs.components), "pair_class": rhs, "equal": True}
