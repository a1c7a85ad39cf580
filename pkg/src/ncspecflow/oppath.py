"""Sampled hermitian paths, their validation, and trivializing operators.

A :class:`HermPath` is a list of samples ``D_{t_0}, ..., D_{t_M}`` on a grid
``0 = t_0 < ... < t_M = 1``.  Between samples the path is understood to be
the linear interpolation of its samples; every refinement in the package
evaluates exactly this interpolant, so all routes see the same continuous
path.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import matfun
from .algebra import AElement, AlgebraShape, Homomorphism
from .errors import (
    GapHitsSpectrum,
    NoGapFound,
    NotHermitian,
    NotNormalizing,
    ShapeMismatch,
)

DEFAULT_GAP_MIN = 1e-6
DEFAULT_REFINE_MAX = 12
# Overlaps above this make the identity the unique optimal matching.
_DOMINANT_OVERLAP = 0.5


class HermPath:
    """Sampled path of hermitian elements of ``M_n(A)``.

    Parameters
    ----------
    shape : AlgebraShape
    rank : int
    t : array_like
        Strictly increasing grid from 0 to 1.
    blocks : sequence of ndarray
        Block ``b`` has shape ``(T, S_b, m_b, m_b)``.
    """

    def __init__(self, shape: AlgebraShape, rank: int, t, blocks):
        self.shape = shape
        self.rank = int(rank)
        t = np.asarray(t, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("t grid needs at least two points")
        if abs(t[0]) > 1e-12 or abs(t[-1] - 1) > 1e-12 or np.any(np.diff(t) <= 0):
            raise ValueError("t grid must increase strictly from 0 to 1")
        t = t.copy()
        t[0], t[-1] = 0.0, 1.0
        self.t = t
        if len(blocks) != len(shape):
            raise ShapeMismatch("one block array per algebra block required")
        out = []
        for spec, B, m in zip(shape, blocks, shape.sizes(self.rank)):
            B = np.asarray(B, dtype=complex)
            want = (t.size, spec.theta_samples, m, m)
            if B.shape == (t.size, m, m) and not spec.is_loop:
                B = B.reshape(want)
            if B.shape != want:
                raise ShapeMismatch(f"block array shape {B.shape}, expected {want}")
            if not np.all(np.isfinite(B)):
                raise ValueError("path has non-finite entries")
            BH = np.swapaxes(B, -1, -2).conj()
            defect = np.linalg.norm(B - BH, axis=(-2, -1))
            scale = 1.0 + np.linalg.norm(B, axis=(-2, -1))
            if np.any(defect > matfun.HERM_RTOL * scale):
                raise NotHermitian(f"path sample hermiticity defect {defect.max():.2e}")
            out.append(0.5 * (B + BH))
        self.blocks = tuple(out)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_elements(cls, t, elements):
        """Build from a list of :class:`AElement` samples."""
        e0 = elements[0]
        blocks = [np.stack([e.blocks[b] for e in elements]) for b in range(len(e0.shape))]
        return cls(e0.shape, e0.rank, t, blocks)

    @classmethod
    def from_function(cls, shape, rank, t, fn):
        """Build from ``fn(t, block_index, theta) -> matrix``."""
        t = np.asarray(t, dtype=float)
        blocks = []
        for b, spec in enumerate(shape):
            m = spec.dim * rank
            blocks.append(np.array([[np.asarray(fn(tv, b, th), dtype=complex).reshape(m, m)
                                     for th in spec.thetas()] for tv in t]))
        return cls(shape, rank, t, blocks)

    @classmethod
    def constant(cls, elem: AElement, n_samples: int = 2):
        t = np.linspace(0, 1, n_samples)
        return cls(elem.shape, elem.rank, t, [np.repeat(B[None], n_samples, axis=0) for B in elem.blocks])

    # -- access -------------------------------------------------------------

    @property
    def n_samples(self) -> int:
        return self.t.size

    def sample(self, i: int) -> AElement:
        return AElement(self.shape, self.rank, tuple(B[i] for B in self.blocks))

    def interp_block(self, b: int, tval: float) -> np.ndarray:
        """Linear interpolant of block `b` at time `tval`, shape ``(S, m, m)``."""
        i = int(np.clip(np.searchsorted(self.t, tval, side="right") - 1, 0, self.n_samples - 2))
        s = (tval - self.t[i]) / (self.t[i + 1] - self.t[i])
        B = self.blocks[b]
        return (1 - s) * B[i] + s * B[i + 1]

    def at(self, tval: float) -> AElement:
        return AElement(self.shape, self.rank, tuple(self.interp_block(b, tval) for b in range(len(self.shape))))

    def resampled(self, t_new) -> "HermPath":
        """The same piecewise-linear path evaluated on another grid."""
        t_new = np.asarray(t_new, dtype=float)
        blocks = [np.stack([self.interp_block(b, tv) for tv in t_new]) for b in range(len(self.shape))]
        return HermPath(self.shape, self.rank, t_new, blocks)

    def map_samples(self, fn) -> "HermPath":
        """Apply ``fn(stack) -> stack`` to each block array ``(T, S, m, m)``."""
        return HermPath(self.shape, self.rank, self.t, [fn(B) for B in self.blocks])

    def apply(self, hom: Homomorphism) -> "HermPath":
        """Apply a coefficient homomorphism samplewise."""
        return HermPath(hom.target(self.shape), self.rank, self.t,
                        hom.apply_blocks(self.shape, self.blocks, self.rank))

    def step_norms(self) -> np.ndarray:
        """``max_{b, theta} ||D_{i+1} - D_i||`` for each step ``i``."""
        out = np.zeros(self.n_samples - 1)
        for B in self.blocks:
            d = np.linalg.norm(np.diff(B, axis=0), 2, axis=(-2, -1))
            out = np.maximum(out, d.max(axis=1))
        return out

    # -- spectral data (cached) ----------------------------------------------

    @cached_property
    def _eigh(self):
        return [np.linalg.eigh(B) for B in self.blocks]

    def eigenvalues(self, b: int) -> np.ndarray:
        """Ascending eigenvalues of block `b`, shape ``(T, S, m)``."""
        return self._eigh[b][0]

    def abs_spectra(self):
        """For each sample, all ``|lambda|`` over blocks and theta, flattened."""
        return [np.concatenate([np.abs(w[i]).ravel() for w, _ in self._eigh])
                for i in range(self.n_samples)]

    @cached_property
    def _perms(self):
        return [_step_permutations(V) for _, V in self._eigh]

    def step_permutations(self, b: int) -> np.ndarray:
        """Overlap matching between consecutive samples, shape ``(T-1, S, m)``.

        ``perm[i, s, c]`` is the sorted index at sample ``i+1`` that continues
        sorted index ``c`` at sample ``i``.
        """
        return self._perms[b]

    def eigen_curves(self, b: int) -> np.ndarray:
        """Matched eigenvalue curves of block `b`, shape ``(T, S, m)``.

        Curve ``c`` starts at the ``c``-th smallest eigenvalue at ``t = 0``
        and follows the maximal-overlap matching.
        """
        w = self.eigenvalues(b)
        perms = self.step_permutations(b)
        T, S, m = w.shape
        idx = np.tile(np.arange(m), (S, 1))
        out = np.empty_like(w)
        out[0] = w[0]
        rows = np.arange(S)[:, None]
        for i in range(T - 1):
            idx = perms[i][rows, idx]
            out[i + 1] = w[i + 1][rows, idx]
        return out


def _step_permutations(V: np.ndarray) -> np.ndarray:
    # V has shape (T, S, m, m).  Identity wherever every diagonal overlap
    # dominates; the assignment solver handles the remaining steps.
    T, S, m, _ = V.shape
    O = np.abs(np.einsum("tsji,tsjk->tsik", V[:-1].conj(), V[1:])) ** 2
    perms = np.tile(np.arange(m), (T - 1, S, 1))
    diag = np.diagonal(O, axis1=-2, axis2=-1)
    todo = np.argwhere(np.any(diag <= _DOMINANT_OVERLAP, axis=-1))
    for i, s in todo:
        perms[i, s] = matfun.match_overlaps(V[i, s], V[i + 1, s])
    return perms


@dataclass
class PathValidity:
    """Outcome of :func:`validate_path`."""

    endpoint_gap: float
    worst_step_motion: float
    worst_step: int
    min_interior_gap_profile: np.ndarray
    gap_min: float
    motion_cap: float
    verdict: str
    reasons: list = field(default_factory=list)

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "endpoint_gap": self.endpoint_gap,
            "worst_step_motion": self.worst_step_motion,
            "worst_step": self.worst_step,
            "gap_min": self.gap_min,
            "motion_cap": self.motion_cap,
            "min_gap_profile": [float(x) for x in self.min_interior_gap_profile],
            "reasons": list(self.reasons),
        }


def validate_path(p: HermPath, gap_min: float = DEFAULT_GAP_MIN, motion_cap=None) -> PathValidity:
    """Check endpoint invertibility and sampling resolution of a path.

    The verdict is ``"invalid"`` when an endpoint eigenvalue lies within
    `gap_min` of zero, ``"refine"`` when matched eigenvalue motion between
    consecutive samples exceeds `motion_cap` (default half the endpoint gap),
    and ``"valid"`` otherwise.  Loop blocks are checked at every theta.
    """
    profile = np.array([s.min() if s.size else np.inf for s in p.abs_spectra()])
    endpoint_gap = float(min(profile[0], profile[-1]))
    cap = 0.5 * endpoint_gap if motion_cap is None else float(motion_cap)

    motion = np.zeros(p.n_samples - 1)
    for b in range(len(p.shape)):
        w = p.eigenvalues(b)
        perms = p.step_permutations(b)
        nxt = np.take_along_axis(w[1:], perms, axis=-1)
        motion = np.maximum(motion, np.abs(nxt - w[:-1]).max(axis=(-2, -1)))
    worst = int(np.argmax(motion)) if motion.size else 0
    worst_motion = float(motion[worst]) if motion.size else 0.0

    reasons = []
    if endpoint_gap < gap_min:
        verdict = "invalid"
        reasons.append(f"endpoint eigenvalue within {gap_min:g} of zero (gap {endpoint_gap:.3e})")
    elif worst_motion > cap:
        verdict = "refine"
        reasons.append(f"eigenvalue motion {worst_motion:.3e} at step {worst} exceeds cap {cap:.3e}")
    else:
        verdict = "valid"
    return PathValidity(endpoint_gap, worst_motion, worst, profile, gap_min, cap, verdict, reasons)


def _batched_calculus(B, f):
    w, V = np.linalg.eigh(B)
    return np.einsum("...ij,...j,...kj->...ik", V, f(w), V.conj())


def normalizing_transform(p: HermPath, f) -> HermPath:
    """Replace every sample ``D`` by ``f(D)``.

    `f` must be odd, non-decreasing, with ``f(0) = 0`` and ``f'(0) > 0``;
    these properties are spot-checked on the union of sampled spectra.
    """
    xs = np.unique(np.concatenate([np.abs(s) for s in p.abs_spectra()]))
    xs = np.concatenate([-xs[::-1], [0.0], xs])
    fx = np.asarray(f(xs), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise NotNormalizing("f is not finite on the sampled spectrum")
    scale = 1.0 + np.max(np.abs(fx))
    if np.any(np.diff(fx) < -1e-12 * scale):
        raise NotNormalizing("f decreases on the sampled spectrum")
    if np.max(np.abs(fx + fx[::-1])) > 1e-9 * scale:
        raise NotNormalizing("f is not odd on the sampled spectrum")
    h = 1e-6
    f0 = float(np.asarray(f(np.array([0.0])))[0])
    slope = float(np.diff(np.asarray(f(np.array([-h, h])), dtype=float))[0]) / (2 * h)
    if abs(f0) > 1e-12 or not slope > 0:
        raise NotNormalizing("need f(0) = 0 and f'(0) > 0")
    return p.map_samples(lambda B: _batched_calculus(B, f))


def trivializing_operator(D: AElement, a: float, tol=None) -> AElement:
    """The shifted spectral window ``A = 2a 1_{[-a, a]}(D)``.

    ``D + A`` has the eigenvalues of ``D`` outside ``[-a, a]`` unchanged and
    those inside moved up by ``2a``, so it is invertible.

    Raises
    ------
    GapHitsSpectrum
        If ``+a`` or ``-a`` is within `tol` of the spectrum of some sample.
    """
    if not a > 0:
        raise ValueError("gap level must be positive")
    out = []
    for B in D.blocks:
        w, V = np.linalg.eigh(B)
        t_ = matfun.ZERO_RTOL * (1 + np.abs(w).max()) if tol is None else tol
        if np.min(np.abs(np.abs(w) - a)) < t_:
            raise GapHitsSpectrum(f"gap level {a} within {t_:.1e} of the spectrum")
        mask = (np.abs(w) <= a).astype(float)
        out.append(2 * a * np.einsum("sij,sj,skj->sik", V, mask, V.conj()))
    return AElement(D.shape, D.rank, tuple(out))


@dataclass(frozen=True)
class Segment:
    """Samples ``start..stop`` (inclusive) share the gap level `level`."""

    start: int
    stop: int
    level: float


def _level_candidates(spec_abs, top):
    s = np.unique(spec_abs)
    mids = [s[0] / 2] if s.size else []
    mids += list(0.5 * (s[1:] + s[:-1]))
    return sorted(set(float(x) for x in mids if x > 0)) + [top]


def find_segments(p: HermPath, gap_min: float = DEFAULT_GAP_MIN, strategy: str = "greedy",
                  rng=None, tol=None):
    """Subdivide a path into segments that each admit a common gap level.

    For every segment the level ``a`` is certified off the spectrum of the
    interpolated path: ``dist(a, |spec D_i|) + dist(a, |spec D_{i+1}|)``
    must exceed ``||D_{i+1} - D_i||`` on every step (distance to the
    spectrum is 1-Lipschitz in the operator norm).  On loop blocks the
    number of eigenvalues below ``-a`` must also be the same at every
    theta sample, so the sections ``1_{>= -a}`` have constant rank.

    Parameters
    ----------
    strategy : {"greedy", "random"}
        ``"greedy"`` takes at each junction the smallest admissible level and
        extends it as far as possible.  ``"random"`` picks a random admissible
        level and a random stop; it exists to test that the flow does not
        depend on the segmentation.
    rng : numpy.random.Generator, optional
        Needed for ``strategy="random"``.

    Raises
    ------
    NoGapFound
        If an endpoint is singular (the offending sample is named).
    """
    spectra = p.abs_spectra()
    for i in (0, p.n_samples - 1):
        if spectra[i].size and spectra[i].min() < gap_min:
            raise NoGapFound(f"sample {i} (t={p.t[i]:g}) is singular; refine or fix the endpoint")
    dn = p.step_norms()
    top_extra = 1.0 + float(dn.max(initial=0.0))
    if tol is None:
        tol = matfun.ZERO_RTOL * (1 + max(float(s.max(initial=0)) for s in spectra))

    per_block = [p.eigenvalues(b) for b in range(len(p.shape))]
    sorted_spec = [np.sort(x) for x in spectra]

    def dist(a, i):
        x = sorted_spec[i]
        if not x.size:
            return np.inf
        k = np.searchsorted(x, a)
        return float(min(abs(x[k] - a) if k < x.size else np.inf, abs(a - x[k - 1]) if k else np.inf))

    def rank_constant(a, i):
        # the section 1_{>= -a} must have theta-independent rank on loop blocks
        for w in per_block:
            counts = np.sum(w[i] < -a, axis=-1)
            if counts.min() != counts.max():
                return False
        return True

    def admissible(a, i):
        return dist(a, i) >= tol and rank_constant(a, i)

    def reach(a, k):
        if not admissible(a, k):
            return k
        j = k
        while j < p.n_samples - 1:
            if not admissible(a, j + 1) or dist(a, j) + dist(a, j + 1) <= dn[j]:
                break
            j += 1
        return j

    def options_at(k):
        top = float(spectra[k].max(initial=0.0)) + top_extra
        for a in _level_candidates(spectra[k], top):
            j = reach(a, k)
            if j > k:
                yield a, j

    segments = []
    k = 0
    while k < p.n_samples - 1:
        if strategy == "greedy":
            a, j = next(options_at(k), (None, k))
        elif strategy == "random":
            if rng is None:
                raise ValueError("random strategy needs an rng")
            options = list(options_at(k))
            a, j = options[int(rng.integers(len(options)))] if options else (None, k)
            if options:
                j = int(rng.integers(k + 1, j + 1))
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        if a is None:
            raise NoGapFound(f"no certified gap level at sample {k} (t={p.t[k]:g}); refine the grid")
        segments.append(Segment(k, j, a))
        k = j
    return segments
