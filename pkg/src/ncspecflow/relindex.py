"""Relative index of a pair of projections.

Two independent constructions are provided: the Fredholm index of
``QP : Ran P -> Ran Q`` computed from a singular value decomposition, and
minus the spectral flow of the straight line from ``2P - 1`` to ``2Q - 1``.
:func:`rel_index_axiom_suite` checks the characterizing axioms on random
inputs.
"""

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    AElement,
    Evaluation,
    Inclusion,
    KZeroClass,
    Permutation,
    Rotation,
    pushforward,
)
from .errors import NonConstantRank, NotProjection, ShapeMismatch
from .matfun import HERM_RTOL

PROJ_RTOL = 1e-8
CROSSING_SAMPLES = 64  # even, so t = 1/2 is never a grid point


def projection_frames(B: np.ndarray, name="P"):
    """Orthonormal frames of the ranges of a stack ``(S, m, m)`` of projections.

    Returns a list of ``(m, r)`` frames, one per theta sample.
    """
    BH = np.swapaxes(B, -1, -2).conj()
    scale = 1 + np.linalg.norm(B, 2, axis=(-2, -1))
    if np.any(np.linalg.norm(B - BH, 2, axis=(-2, -1)) > HERM_RTOL * scale * 100):
        raise NotProjection(f"{name} is not hermitian")
    if np.any(np.linalg.norm(B @ B - B, 2, axis=(-2, -1)) > PROJ_RTOL * scale):
        raise NotProjection(f"{name} is not idempotent")
    w, V = np.linalg.eigh(0.5 * (B + BH))
    if np.any((w > 0.1) & (w < 0.9)):
        raise NotProjection(f"{name} has an eigenvalue in (0.1, 0.9)")
    return [V[s][:, w[s] >= 0.5] for s in range(B.shape[0])]


def block_ranks(P: AElement, name="P"):
    """Rank per block; raises NonConstantRank if a loop block's rank varies."""
    ranks = []
    for b, B in enumerate(P.blocks):
        rs = {F.shape[1] for F in projection_frames(B, name)}
        if len(rs) != 1:
            raise NonConstantRank(f"rank of {name} varies with theta on block {b}")
        ranks.append(rs.pop())
    return ranks


@dataclass(frozen=True)
class ProjectionPair:
    P: AElement
    Q: AElement

    def __post_init__(self):
        if self.P.shape != self.Q.shape or self.P.rank != self.Q.rank:
            raise ShapeMismatch("P and Q live over different modules")
        block_ranks(self.P, "P")
        block_ranks(self.Q, "Q")

    @property
    def shape(self):
        return self.P.shape

    @property
    def rank(self):
        return self.P.rank


def _qp_index(FP, FQ):
    M = FQ.conj().T @ FP
    if M.size == 0:
        return FP.shape[1] - FQ.shape[1]
    s = np.linalg.svd(M, compute_uv=False)
    r = int(np.sum(s > 1e-8))
    kernel = FP.shape[1] - r
    cokernel = FQ.shape[1] - r
    return kernel - cokernel


def rel_index_fredholm(pp: ProjectionPair) -> KZeroClass:
    """``ind(P, Q)`` as the index of ``QP : Ran P -> Ran Q``, per block."""
    comps = []
    for b in range(len(pp.shape)):
        FPs = projection_frames(pp.P.blocks[b], "P")
        FQs = projection_frames(pp.Q.blocks[b], "Q")
        idx = {_qp_index(FP, FQ) for FP, FQ in zip(FPs, FQs)}
        if len(idx) != 1:
            raise NonConstantRank(f"index varies with theta on block {b}")
        comps.append(idx.pop())
    return KZeroClass(pp.shape, tuple(comps))


def straight_line_path(pp: ProjectionPair, n_samples=CROSSING_SAMPLES):
    """The path ``(1-t)(2P-1) + t(2Q-1)``."""
    from .oppath import HermPath

    t = np.linspace(0, 1, n_samples)
    blocks = []
    for BP, BQ in zip(pp.P.blocks, pp.Q.blocks):
        eye = np.eye(BP.shape[-1])
        A, B = 2 * BP - eye, 2 * BQ - eye
        blocks.append(np.array([(1 - tv) * A + tv * B for tv in t]))
    return HermPath(pp.shape, pp.rank, t, blocks)


def rel_index_crossing(pp: ProjectionPair, n_samples=CROSSING_SAMPLES) -> KZeroClass:
    """``ind(P, Q)`` as minus the crossing count of the straight line from ``2P-1`` to ``2Q-1``."""
    from .specflow import spectral_flow_crossings

    return -spectral_flow_crossings(straight_line_path(pp, n_samples)).value


def rel_index(P: AElement, Q: AElement) -> KZeroClass:
    return rel_index_fredholm(ProjectionPair(P, Q))


# ------------------------------------------------------------- axiom suite

@dataclass
class AxiomReport:
    """Pass/fail tallies per property; failures carry a reproducer seed."""

    passed: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def record(self, name, ok, seed, detail=""):
        self.passed.setdefault(name, 0)
        if ok:
            self.passed[name] += 1
        else:
            self.failures.append({"check": name, "seed": int(seed), "detail": detail})

    @property
    def ok(self):
        return not self.failures

    def merge(self, other):
        for k, v in other.passed.items():
            self.passed[k] = self.passed.get(k, 0) + v
        self.failures.extend(other.failures)
        return self

    def to_dict(self):
        return {"ok": self.ok, "passed": dict(sorted(self.passed.items())),
                "failures": list(self.failures)}


def _conjugate(U: AElement, P: AElement) -> AElement:
    return U @ P @ U.adjoint()


def _homomorphisms(shape, rng):
    homs = []
    for b, spec in enumerate(shape):
        if spec.is_loop:
            homs.append(Evaluation(b, int(rng.integers(spec.theta_samples))))
            homs.append(Rotation(b, int(rng.integers(1, spec.theta_samples))))
    if len(shape) > 1:
        homs.append(Permutation(tuple(int(i) for i in rng.permutation(len(shape)))))
    homs.append(Inclusion(tuple(range(len(shape))) + (0,)))
    return homs


def _split_projections(rng, shape, rank, reserve):
    """Random P, Q living in the first coordinates and R in the last `reserve`."""
    from .fixtures import random_unitary_element

    U = random_unitary_element(rng, shape, rank)
    blocks_P, blocks_Q, blocks_R = [], [], []
    for spec, B in zip(shape, U.blocks):
        m = B.shape[-1]
        k = min(reserve * spec.dim, m - 1)
        S = B.shape[0]
        Ps = []
        for _ in range(2):
            Y = np.zeros((S, m, m), dtype=complex)
            Y[:, :m - k, :m - k] = _rand_proj_stack(rng, S, m - k, spec)
            Ps.append(Y)
        R = np.zeros((S, m, m), dtype=complex)
        R[:, m - k:, m - k:] = _rand_proj_stack(rng, S, k, spec)
        conj = lambda Y: B @ Y @ np.swapaxes(B, -1, -2).conj()
        blocks_P.append(conj(Ps[0]))
        blocks_Q.append(conj(Ps[1]))
        blocks_R.append(conj(R))
    mk = lambda bl: AElement(shape, rank, tuple(bl))
    return mk(blocks_P), mk(blocks_Q), mk(blocks_R)


def _rand_proj_stack(rng, S, m, spec):
    from .fixtures import random_unitary, unitary_loop

    if m == 0:
        return np.zeros((S, 0, 0))
    r = int(rng.integers(0, m + 1))
    D = np.diag([1.0] * r + [0.0] * (m - r))
    U = unitary_loop(rng, m, spec.thetas()) if spec.is_loop else random_unitary(rng, m)[None]
    return U @ D @ np.swapaxes(U, -1, -2).conj()


def rel_index_axiom_suite(shape, trials=100, seed=0, rank=2) -> AxiomReport:
    """Randomized check of the relative-index axioms and derived properties.

    Checks, per trial: agreement of the two constructions, additivity
    ``ind(P,R) = ind(P,Q) + ind(Q,R)``, antisymmetry, stabilization by a
    projection orthogonal to both, normalization ``ind(P+Q, Q) = [P]`` for
    orthogonal ``P, Q``, conjugation invariance and functoriality under the
    supported homomorphisms.  Trial ``i`` uses seed ``seed + i``.
    """
    from .fixtures import projection_ranks, random_projection, random_unitary_element

    report = AxiomReport()
    for i in range(trials):
        s = seed + i
        rng = np.random.default_rng(s)
        P, Q, R = (random_projection(rng, shape, rank) for _ in range(3))
        iPQ = rel_index(P, Q)
        iQR = rel_index(Q, R)
        iPR = rel_index(P, R)
        report.record("uniqueness", rel_index_crossing(ProjectionPair(P, Q)) == iPQ, s)
        report.record("additivity", iPR == iPQ + iQR, s)
        report.record("antisymmetry", rel_index(Q, P) == -iPQ, s)
        report.record("diagonal", rel_index(P, P) == KZeroClass.zero(shape), s)

        P1, Q1, R1 = _split_projections(rng, shape, rank, reserve=1)
        report.record("stabilization", rel_index(P1 + R1, Q1 + R1) == rel_index(P1, Q1), s)
        # P1 and R1 are orthogonal: ind(P1 + R1, P1) = [R1]
        report.record("normalization",
                      rel_index(R1 + P1, P1).components == tuple(projection_ranks(R1)), s)

        U = random_unitary_element(rng, shape, rank)
        report.record("conjugation", rel_index(_conjugate(U, P), _conjugate(U, Q)) == iPQ, s)

        for hom in _homomorphisms(shape, rng):
            ok = rel_index(hom.apply(P), hom.apply(Q)) == pushforward(iPQ, hom)
            report.record("functoriality", ok, s, detail=repr(hom))
    return report
