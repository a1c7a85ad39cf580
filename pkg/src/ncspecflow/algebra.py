"""Coefficient algebras, their sampled elements and K-theory classes.

An algebra is a finite direct sum of blocks.  A *scalar* block is ``M_k``;
a *loop* block is ``C(S^1) (x) M_k`` sampled on a uniform grid of
``theta_samples`` points in ``[0, 2 pi)``.  Elements of ``M_n(A)`` are stored
block by block as arrays of shape ``(S, m, m)`` with ``m = dim * n`` and
``S = 1`` for scalar blocks, ``S = theta_samples`` for loop blocks.  Paths
add a leading time axis, so every routine in the package can treat the
theta axis as axis ``-3``.
"""

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ShapeMismatch, UnsupportedHomomorphism

MIN_THETA_SAMPLES = 8


@dataclass(frozen=True)
class BlockSpec:
    kind: str
    dim: int
    theta_samples: int = 1

    def __post_init__(self):
        if self.kind not in ("scalar", "loop"):
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("block dim must be >= 1")
        if self.kind == "loop" and self.theta_samples < MIN_THETA_SAMPLES:
            raise ValueError(f"loop blocks need >= {MIN_THETA_SAMPLES} theta samples")
        if self.kind == "scalar" and self.theta_samples != 1:
            object.__setattr__(self, "theta_samples", 1)

    @property
    def is_loop(self) -> bool:
        return self.kind == "loop"

    def thetas(self) -> np.ndarray:
        if not self.is_loop:
            return np.zeros(1)
        return 2 * np.pi * np.arange(self.theta_samples) / self.theta_samples

    def to_dict(self):
        d = {"kind": self.kind, "dim": self.dim}
        if self.is_loop:
            d["theta_samples"] = self.theta_samples
        return d


def scalar(dim: int) -> BlockSpec:
    return BlockSpec("scalar", dim)


def loop(dim: int, theta_samples: int = 16) -> BlockSpec:
    return BlockSpec("loop", dim, theta_samples)


@dataclass(frozen=True)
class AlgebraShape:
    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise ValueError("an algebra needs at least one block")

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]

    def sizes(self, rank: int):
        """Matrix size of each block for module rank `rank`."""
        return [b.dim * rank for b in self.blocks]

    def to_dict(self):
        return {"blocks": [b.to_dict() for b in self.blocks]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(BlockSpec(b["kind"], int(b["dim"]), int(b.get("theta_samples", 1)))
                         for b in d["blocks"]))


def _check_same_shape(a, b):
    if a != b:
        raise ShapeMismatch("algebra shapes differ")


@dataclass(frozen=True)
class AElement:
    """An element of ``M_n(A)`` sampled block by block.

    Attributes
    ----------
    shape : AlgebraShape
    rank : int
        Module rank ``n``.
    blocks : tuple of ndarray
        Block ``b`` has shape ``(S_b, m_b, m_b)``.
    """

    shape: AlgebraShape
    rank: int
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(np.asarray(B, dtype=complex) for B in self.blocks)
        if len(blocks) != len(self.shape):
            raise ShapeMismatch(f"{len(blocks)} blocks given for a {len(self.shape)}-block algebra")
        for spec, B, m in zip(self.shape, blocks, self.shape.sizes(self.rank)):
            want = (spec.theta_samples, m, m)
            if B.shape == (m, m) and not spec.is_loop:
                B = B.reshape(want)
            if B.shape != want:
                raise ShapeMismatch(f"block array shape {B.shape}, expected {want}")
            if not np.all(np.isfinite(B)):
                raise ValueError("element has non-finite entries")
        blocks = tuple(B.reshape(spec.theta_samples, m, m)
                       for spec, B, m in zip(self.shape, blocks, self.shape.sizes(self.rank)))
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_function(cls, shape, rank, fn):
        """Build an element from ``fn(block_index, theta) -> matrix``."""
        blocks = []
        for b, spec in enumerate(shape):
            blocks.append(np.stack([np.asarray(fn(b, th), dtype=complex).reshape(
                spec.dim * rank, spec.dim * rank) for th in spec.thetas()]))
        return cls(shape, rank, tuple(blocks))

    @classmethod
    def identity(cls, shape, rank):
        return cls.from_function(shape, rank, lambda b, th: np.eye(shape[b].dim * rank))

    @classmethod
    def zeros(cls, shape, rank):
        return cls.from_function(shape, rank, lambda b, th: np.zeros((shape[b].dim * rank,) * 2))

    def samples(self) -> Iterator:
        """Yield ``(block, theta_index, matrix)`` in a fixed order."""
        for b, B in enumerate(self.blocks):
            for j in range(B.shape[0]):
                yield b, j, B[j]

    def map(self, fn) -> "AElement":
        """Apply ``fn(matrix) -> matrix`` to every sample (same size)."""
        return AElement(self.shape, self.rank,
                        tuple(np.stack([fn(B[j]) for j in range(B.shape[0])]) for B in self.blocks))

    def _combine(self, other, op):
        _check_same_shape(self.shape, other.shape)
        if self.rank != other.rank:
            raise ShapeMismatch("module ranks differ")
        return AElement(self.shape, self.rank, tuple(op(a, c) for a, c in zip(self.blocks, other.blocks)))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __matmul__(self, other):
        return self._combine(other, np.matmul)

    def scale(self, c) -> "AElement":
        return AElement(self.shape, self.rank, tuple(c * B for B in self.blocks))

    def adjoint(self) -> "AElement":
        return AElement(self.shape, self.rank, tuple(np.swapaxes(B, -1, -2).conj() for B in self.blocks))

    def norm(self) -> float:
        return max(float(np.max(np.linalg.norm(B, 2, axis=(-2, -1)))) for B in self.blocks)

    def theta_step_norms(self):
        """Largest sample-to-sample jump (including the wrap) per loop block."""
        out = []
        for spec, B in zip(self.shape, self.blocks):
            if spec.is_loop:
                diffs = np.roll(B, -1, axis=0) - B
                out.append(float(np.max(np.linalg.norm(diffs, 2, axis=(-2, -1)))))
            else:
                out.append(0.0)
        return out

    def allclose(self, other, atol=1e-10) -> bool:
        return (self.shape == other.shape and self.rank == other.rank
                and all(np.allclose(a, c, atol=atol, rtol=0) for a, c in zip(self.blocks, other.blocks)))


def block_diag_stack(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Blockwise direct sum over leading axes: ``diag(A, B)`` in the last two."""
    lead = np.broadcast_shapes(A.shape[:-2], B.shape[:-2])
    m, k = A.shape[-1], B.shape[-1]
    out = np.zeros(lead + (m + k, m + k), dtype=complex)
    out[..., :m, :m] = A
    out[..., m:, m:] = B
    return out


def direct_sum(x: AElement, y: AElement) -> AElement:
    """Module direct sum: rank ``n_x + n_y``, block matrices block-diagonal."""
    _check_same_shape(x.shape, y.shape)
    return AElement(x.shape, x.rank + y.rank,
                    tuple(block_diag_stack(a, c) for a, c in zip(x.blocks, y.blocks)))


# ----------------------------------------------------------------- K-classes

@dataclass(frozen=True)
class KZeroClass:
    """One integer per block."""

    shape: AlgebraShape
    components: tuple

    def __post_init__(self):
        comps = tuple(int(c) for c in self.components)
        if len(comps) != len(self.shape):
            raise ShapeMismatch("one K0 component per block required")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zero(cls, shape):
        return cls(shape, (0,) * len(shape))

    def __neg__(self):
        return KZeroClass(self.shape, tuple(-c for c in self.components))

    def __add__(self, other):
        return k_add(self, other)

    def __sub__(self, other):
        return k_add(self, -other)


@dataclass(frozen=True)
class KOneClass:
    """One winding integer per loop block; scalar components are always 0."""

    shape: AlgebraShape
    components: tuple

    def __post_init__(self):
        comps = tuple(int(c) for c in self.components)
        if len(comps) != len(self.shape):
            raise ShapeMismatch("one K1 component per block required")
        for spec, c in zip(self.shape, comps):
            if not spec.is_loop and c != 0:
                raise ValueError("K1 of a matrix block vanishes; scalar components must be 0")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zero(cls, shape):
        return cls(shape, (0,) * len(shape))

    def __neg__(self):
        return KOneClass(self.shape, tuple(-c for c in self.components))

    def __add__(self, other):
        return k_add(self, other)

    def __sub__(self, other):
        return k_add(self, -other)


def k_add(x, y):
    """Componentwise sum of two classes of the same kind over the same shape."""
    if type(x) is not type(y):
        raise ShapeMismatch("cannot add K0 and K1 classes")
    _check_same_shape(x.shape, y.shape)
    return type(x)(x.shape, tuple(a + b for a, b in zip(x.components, y.components)))


# ----------------------------------------------------------- homomorphisms
#
# Each homomorphism acts on per-block arrays whose theta axis is -3, so the
# same code handles elements (S, m, m) and paths (T, S, m, m).

class Homomorphism:
    def target(self, shape: AlgebraShape) -> AlgebraShape:
        raise NotImplementedError

    def apply_blocks(self, shape, blocks: Sequence[np.ndarray], rank: int) -> tuple:
        raise NotImplementedError

    def push_components(self, shape, comps, kind: str) -> tuple:
        raise NotImplementedError

    def apply(self, x: AElement) -> AElement:
        return AElement(self.target(x.shape), x.rank, self.apply_blocks(x.shape, x.blocks, x.rank))


def _check_block(shape, i, loop_required=False):
    if not 0 <= i < len(shape):
        raise UnsupportedHomomorphism(f"block index {i} out of range")
    if loop_required and not shape[i].is_loop:
        raise UnsupportedHomomorphism(f"block {i} is not a loop block")


@dataclass(frozen=True)
class Evaluation(Homomorphism):
    """Evaluate loop block `block` at grid point `theta_index` (loop -> scalar)."""

    block: int
    theta_index: int

    def target(self, shape):
        _check_block(shape, self.block, loop_required=True)
        if not 0 <= self.theta_index < shape[self.block].theta_samples:
            raise UnsupportedHomomorphism("theta index out of range")
        blocks = list(shape.blocks)
        blocks[self.block] = scalar(shape[self.block].dim)
        return AlgebraShape(tuple(blocks))

    def apply_blocks(self, shape, blocks, rank):
        self.target(shape)
        out = list(blocks)
        j = self.theta_index
        out[self.block] = blocks[self.block][..., j:j + 1, :, :]
        return tuple(out)

    def push_components(self, shape, comps, kind):
        self.target(shape)
        out = list(comps)
        if kind == "K1":
            out[self.block] = 0
        return tuple(out)


@dataclass(frozen=True)
class Rotation(Homomorphism):
    """Precompose loop block `block` with theta -> theta + shift * (2 pi / N)."""

    block: int
    shift: int

    def target(self, shape):
        _check_block(shape, self.block, loop_required=True)
        return shape

    def apply_blocks(self, shape, blocks, rank):
        self.target(shape)
        out = list(blocks)
        out[self.block] = np.roll(blocks[self.block], -self.shift, axis=-3)
        return tuple(out)

    def push_components(self, shape, comps, kind):
        self.target(shape)
        return tuple(comps)


@dataclass(frozen=True)
class Permutation(Homomorphism):
    """Target block ``j`` is source block ``perm[j]``."""

    perm: tuple

    def target(self, shape):
        if sorted(self.perm) != list(range(len(shape))):
            raise UnsupportedHomomorphism(f"{self.perm} is not a permutation of the blocks")
        return AlgebraShape(tuple(shape[i] for i in self.perm))

    def apply_blocks(self, shape, blocks, rank):
        self.target(shape)
        return tuple(blocks[i] for i in self.perm)

    def push_components(self, shape, comps, kind):
        self.target(shape)
        return tuple(comps[i] for i in self.perm)


@dataclass(frozen=True)
class Inclusion(Homomorphism):
    """Block inclusion into a larger direct sum.

    ``sources[j]`` names the source block copied into target block ``j``;
    ``None`` marks a new block (spec taken from `extra`) that receives zero.
    A source block may be copied more than once (diagonal embedding).
    """

    sources: tuple
    extra: tuple = field(default_factory=tuple)

    def _extra_spec(self, j):
        for k, spec in self.extra:
            if k == j:
                return spec
        raise UnsupportedHomomorphism(f"no block spec supplied for new target block {j}")

    def target(self, shape):
        specs = []
        for j, i in enumerate(self.sources):
            if i is None:
                specs.append(self._extra_spec(j))
            else:
                _check_block(shape, i)
                specs.append(shape[i])
        return AlgebraShape(tuple(specs))

    def apply_blocks(self, shape, blocks, rank):
        tgt = self.target(shape)
        lead = blocks[0].shape[:-3]
        out = []
        for j, i in enumerate(self.sources):
            if i is None:
                spec = tgt[j]
                m = spec.dim * rank
                out.append(np.zeros(lead + (spec.theta_samples, m, m), dtype=complex))
            else:
                out.append(blocks[i].copy())
        return tuple(out)

    def push_components(self, shape, comps, kind):
        self.target(shape)
        return tuple(0 if i is None else comps[i] for i in self.sources)


@dataclass(frozen=True)
class Composite(Homomorphism):
    """Apply `homs` left to right."""

    homs: tuple

    def target(self, shape):
        for h in self.homs:
            shape = h.target(shape)
        return shape

    def apply_blocks(self, shape, blocks, rank):
        for h in self.homs:
            blocks = h.apply_blocks(shape, blocks, rank)
            shape = h.target(shape)
        return tuple(blocks)

    def push_components(self, shape, comps, kind):
        for h in self.homs:
            comps = h.push_components(shape, comps, kind)
            shape = h.target(shape)
        return tuple(comps)


def pushforward(cls, hom: Homomorphism):
    """Image of a K0 or K1 class under a supported homomorphism."""
    if not isinstance(hom, Homomorphism):
        raise UnsupportedHomomorphism(f"unsupported homomorphism {hom!r}")
    kind = "K1" if isinstance(cls, KOneClass) else "K0"
    comps = hom.push_components(cls.shape, cls.components, kind)
    return type(cls)(hom.target(cls.shape), comps)
