"""Random and canonical inputs shared by the tests, the oracles and the CLI.

Generators take a ``numpy.random.Generator`` and return library objects.
Loop-block data is built from smooth periodic functions of theta, so the
sampled loops are continuous at any grid size.
"""

import numpy as np
from scipy.linalg import expm
from scipy.stats import unitary_group

from .algebra import AElement, AlgebraShape, loop, scalar
from .oppath import HermPath


def random_hermitian(rng, m, scale=1.0):
    X = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return scale * 0.5 * (X + X.conj().T) / np.sqrt(2 * m)


def random_unitary(rng, m):
    if m == 1:
        return np.exp(1j * rng.uniform(0, 2 * np.pi)).reshape(1, 1)
    return unitary_group.rvs(m, random_state=rng)


def unitary_loop(rng, m, thetas, winding=0, wiggle=0.8):
    """Periodic unitary loop ``V expm(i(cos th H1 + sin th H2)) diag(e^{i w th}, 1, ...)``.

    ``det`` winds `winding` times around the origin.
    """
    V = random_unitary(rng, m)
    H1, H2 = random_hermitian(rng, m, wiggle), random_hermitian(rng, m, wiggle)
    out = []
    for th in thetas:
        d = np.ones(m, dtype=complex)
        d[0] = np.exp(1j * winding * th)
        out.append(V @ expm(1j * (np.cos(th) * H1 + np.sin(th) * H2)) @ np.diag(d))
    return np.array(out)


def random_shape(rng, max_blocks=2, max_dim=2, theta_samples=16, loops=True):
    blocks = []
    for _ in range(int(rng.integers(1, max_blocks + 1))):
        dim = int(rng.integers(1, max_dim + 1))
        if loops and rng.random() < 0.5:
            blocks.append(loop(dim, theta_samples))
        else:
            blocks.append(scalar(dim))
    return AlgebraShape(tuple(blocks))


def random_unitary_element(rng, shape, rank, windings=None):
    blocks = []
    for b, spec in enumerate(shape):
        m = spec.dim * rank
        w = 0 if windings is None or not spec.is_loop else int(windings[b])
        if spec.is_loop:
            blocks.append(unitary_loop(rng, m, spec.thetas(), w))
        else:
            blocks.append(random_unitary(rng, m)[None])
    return AElement(shape, rank, tuple(blocks))


def random_projection(rng, shape, rank, ranks=None):
    """Projection element with block ranks `ranks` (random if omitted)."""
    blocks = []
    for b, spec in enumerate(shape):
        m = spec.dim * rank
        r = int(rng.integers(0, m + 1)) if ranks is None else int(ranks[b])
        D = np.diag([1.0] * r + [0.0] * (m - r))
        if spec.is_loop:
            U = unitary_loop(rng, m, spec.thetas())
        else:
            U = random_unitary(rng, m)[None]
        blocks.append(U @ D @ np.swapaxes(U, -1, -2).conj())
    return AElement(shape, rank, tuple(blocks))


def projection_ranks(P: AElement):
    return [int(round(np.trace(B[0]).real)) for B in P.blocks]


def random_invertible_hermitian(rng, shape, rank, gap=0.3, spread=2.0, negatives=None):
    """Hermitian element whose eigenvalues are theta-independent and ``|lambda| >= gap``."""
    blocks = []
    for b, spec in enumerate(shape):
        m = spec.dim * rank
        mags = rng.uniform(gap, spread, size=m)
        if negatives is None:
            signs = rng.choice([-1.0, 1.0], size=m)
        else:
            signs = np.array([-1.0] * int(negatives[b]) + [1.0] * (m - int(negatives[b])))
        lam = np.sort(signs * mags)
        if spec.is_loop:
            U = unitary_loop(rng, m, spec.thetas())
        else:
            U = random_unitary(rng, m)[None]
        blocks.append(U @ np.diag(lam) @ np.swapaxes(U, -1, -2).conj())
    return AElement(shape, rank, tuple(blocks))


def random_smooth_hermitian(rng, shape, rank, scale=0.5):
    """Hermitian element ``cos th H1 + sin th H2 + H0`` (constant on scalar blocks)."""
    blocks = []
    for spec in shape:
        m = spec.dim * rank
        H0, H1, H2 = (random_hermitian(rng, m, scale) for _ in range(3))
        blocks.append(np.array([H0 + np.cos(th) * H1 + np.sin(th) * H2 for th in spec.thetas()]))
    return AElement(shape, rank, tuple(blocks))


def random_path(rng, shape, rank, n_samples=129, gap=0.3, bump=1.5):
    """Random path with invertible endpoints: ``(1-t) D0 + t D1 + sin(pi t) C``.

    The endpoint spectra are theta-independent with gap at least `gap`; the
    interior is free to cross zero.
    """
    D0 = random_invertible_hermitian(rng, shape, rank, gap)
    D1 = random_invertible_hermitian(rng, shape, rank, gap)
    C = random_smooth_hermitian(rng, shape, rank, bump)
    t = np.linspace(0, 1, n_samples)
    blocks = []
    for b in range(len(shape)):
        a0, a1, c = D0.blocks[b], D1.blocks[b], C.blocks[b]
        blocks.append(np.array([(1 - tv) * a0 + tv * a1 + np.sin(np.pi * tv) * c for tv in t]))
    return HermPath(shape, rank, t, blocks)


def axiom_v_path(P: AElement, n_samples=64) -> HermPath:
    """The path ``2tP - 1``."""
    t = np.linspace(0, 1, n_samples)
    blocks = []
    for B in P.blocks:
        eye = np.eye(B.shape[-1])
        blocks.append(np.array([2 * tv * B - eye for tv in t]))
    return HermPath(P.shape, P.rank, t, blocks)


def divergence_profile(n, t):
    """Piecewise-linear non-decreasing ``f_n``: -1 up to ``1/2 - 2/n``,
    zero at ``1/2 - 1/n``, +1 from ``1/2`` on."""
    return np.interp(t, [0.5 - 2.0 / n, 0.5 - 1.0 / n, 0.5], [-1.0, 0.0, 1.0])


def divergence_path(dim, n_samples=17, first_index=3) -> HermPath:
    """Diagonal truncation ``diag(f_n(t))`` for ``n = first_index, ..., first_index + dim - 1``.

    ``first_index = 3`` is the first index whose three breakpoints lie in
    ``[0, 1]`` with ``f_n(0) != 0``, so both endpoints are invertible and
    the path fails only through its sampling resolution.
    """
    t = np.linspace(0, 1, n_samples)
    ns = np.arange(first_index, first_index + dim)
    vals = np.array([[divergence_profile(n, tv) for n in ns] for tv in t])
    blocks = [np.array([np.diag(v) for v in vals])[:, None]]
    return HermPath(AlgebraShape((scalar(dim),)), 1, t, blocks)


def random_lagrangian_curve(rng, shape, rank, t, sweep=1.5, frame_loops=None):
    """Unitary curve ``W(th) expm(i t H) V W(th)*`` per block.

    Loop blocks are conjugated by the smooth loop ``W`` (shared through
    `frame_loops` when several curves must stay mutually transverse for
    every theta).  Returns ``(LagrangianCurve, frame_loops)``.
    """
    from .maslov import LagrangianCurve

    if frame_loops is None:
        frame_loops = [unitary_loop(rng, spec.dim * rank, spec.thetas()) if spec.is_loop
                       else np.eye(spec.dim * rank)[None] for spec in shape]
    blocks = []
    for spec, W in zip(shape, frame_loops):
        m = spec.dim * rank
        V = random_unitary(rng, m)
        H = random_hermitian(rng, m, 2 * sweep * np.sqrt(m))
        core = np.array([expm(1j * tv * H) @ V for tv in t])
        WH = np.swapaxes(W, -1, -2).conj()
        blocks.append(W[None] @ core[:, None] @ WH[None])
    return LagrangianCurve(shape, rank, np.asarray(t, dtype=float), tuple(blocks)), frame_loops


def random_invertible_loop(rng, m, thetas, winding=0, spread=1.5):
    """Loop of invertible matrices ``U(th) diag(s)`` with singular values in ``[0.5, spread]``."""
    U = unitary_loop(rng, m, thetas, winding)
    s = rng.uniform(0.5, spread, size=m)
    V = random_unitary(rng, m)
    return U @ (V * s) @ V.conj().T


def random_graded_path(rng, shape, rank, n_samples=65, windings=None, bump=0.8):
    """Odd path with ``W_t = (1-t) W0 + t W1 + sin(pi t) C``; endpoints invertible.

    Block sizes ``dim * rank`` must be even; ``k`` is half of that.  `windings`
    gives ``(w0, w1)`` per block for the determinant windings of the endpoints.
    """
    from .oddflow import GradedHermPath

    t = np.linspace(0, 1, n_samples)
    Ws = []
    for b, spec in enumerate(shape):
        k = spec.dim * rank // 2
        th = spec.thetas()
        w0, w1 = (0, 0) if windings is None or not spec.is_loop else windings[b]
        W0 = random_invertible_loop(rng, k, th, w0)
        W1 = random_invertible_loop(rng, k, th, w1)
        C1, C2 = (rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k)) for _ in range(2))
        C = np.array([bump * (np.cos(a) * C1 + np.sin(a) * C2) / np.sqrt(k) for a in th])
        Ws.append(np.array([(1 - tv) * W0 + tv * W1 + np.sin(np.pi * tv) * C for tv in t]))
    return GradedHermPath.from_W(shape, rank, t, Ws)


def random_kernel_instance(rng, N=32, k=3, kernel_rank=1, winding=1):
    """Odd loop element with a constant-rank kernel and two kernel Lagrangians.

    ``D = U diag-odd(W) U*`` with an even unitary loop ``U`` and
    ``W = diag(0_r, invertible)``; the Lagrangians are graphs of kernel
    unitaries ``v0`` (random constant) and ``v1 = v0 * diag(e^{i w th}, 1, ...)``.
    Returns ``(D, L0, L1)`` as elements over one loop block of dimension ``2k``.
    """
    from .algebra import AlgebraShape, AElement
    from .oddflow import odd_from_W

    shape = AlgebraShape((loop(2 * k, N),))
    th = shape[0].thetas()
    r = kernel_rank
    Up = unitary_loop(rng, k, th)
    Um = unitary_loop(rng, k, th)
    Winv = random_invertible_loop(rng, k - r, th)
    W = np.zeros((N, k, k), dtype=complex)
    W[:, r:, r:] = Winv
    U = np.zeros((N, 2 * k, 2 * k), dtype=complex)
    U[:, :k, :k] = Up
    U[:, k:, k:] = Um
    UH = np.swapaxes(U, -1, -2).conj()
    D = U @ odd_from_W(W) @ UH
    v0 = random_unitary(rng, r)
    Ls = []
    for w in (0, winding):
        blocks = []
        for j, a in enumerate(th):
            d = np.ones(r, dtype=complex)
            d[0] = np.exp(1j * w * a)
            v = v0 @ np.diag(d)
            f = np.concatenate([Up[j][:, :r], Um[j][:, :r] @ v]) / np.sqrt(2)
            blocks.append(f @ f.conj().T)
        Ls.append(np.array(blocks))
    mk = lambda B: AElement(shape, 1, (B,))
    return mk(D), mk(Ls[0]), mk(Ls[1])


def random_almost_involution(rng, shape, rank, eps=0.03):
    """Hermitian ``F = U diag(s) U*`` with ``|s| = 1 + O(eps)`` and random signs."""
    from .algebra import AElement

    blocks = []
    for spec in shape:
        m = spec.dim * rank
        s = rng.choice([-1.0, 1.0], size=m) * (1 + rng.uniform(-eps, eps, size=m))
        U = unitary_loop(rng, m, spec.thetas()) if spec.is_loop else random_unitary(rng, m)[None]
        blocks.append((U * s[None, None, :]) @ np.swapaxes(U, -1, -2).conj())
    return AElement(shape, rank, tuple(blocks))
