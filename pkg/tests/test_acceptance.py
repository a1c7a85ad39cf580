"""Acceptance criteria, one test per criterion.

``tests/conftest.py`` prints a single PASS/FAIL line per criterion at the end
of the run.  Every criterion draws from its own seeded generator.
"""

import contextlib
import io
import json
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose
from scipy.linalg import expm

from ncspecflow import _signs, cli
from ncspecflow.algebra import AElement, AlgebraShape, Evaluation, KZeroClass, Rotation, loop, pushforward, scalar
from ncspecflow.errors import NotTransverse, UnresolvedCrossing
from ncspecflow.fixtures import (
    axiom_v_path,
    divergence_path,
    projection_ranks,
    random_almost_involution,
    random_graded_path,
    random_hermitian,
    random_kernel_instance,
    random_lagrangian_curve,
    random_path,
    random_projection,
    random_unitary,
    unitary_loop,
)
from ncspecflow.maslov import (
    Lagrangian,
    LagrangianPath,
    interval_spectrum,
    maslov_pair,
    maslov_triple,
    min_transversality,
    triple_pair_identity,
)
from ncspecflow.oddflow import (
    GradedHermPath,
    LagrangianProjection,
    odd_rel_index,
    odd_spectral_flow,
    suspend_bounded_check,
    suspend_even_to_odd,
    suspend_odd_to_even,
    splitting_correction_check,
)
from ncspecflow.oppath import HermPath, normalizing_transform, validate_path
from ncspecflow.oracle import (
    SIGN_NAMES,
    dense_crossing_oracle,
    naive_crossing_count,
    pin_sign_constants,
    shooting_maslov,
    shooting_spectrum,
)
from ncspecflow.relindex import ProjectionPair, rel_index_axiom_suite, rel_index_crossing, rel_index_fredholm
from ncspecflow.specflow import (
    _random_odd_monotone,
    concatenate,
    direct_sum,
    endpoint_count,
    reverse,
    spectral_flow,
    spectral_flow_crossings,
    spectral_flow_sections,
    spectral_flow_winding,
)

ROOT = Path(__file__).resolve().parents[1]
TOL_SHOOT = 1e-8
TOL_TRIPLE_CROSS = 1e-8
TOL_TRIPLE_HERM = 1e-9
# triples closer than this to non-transverse are not regular enough for
# the 1e-8 cross-check; they are redrawn
TRIPLE_MARGIN = 0.05

SHAPES = (
    AlgebraShape((scalar(1),)),
    AlgebraShape((scalar(2),)),
    AlgebraShape((scalar(3),)),
    AlgebraShape((scalar(2), loop(1, 8))),
    AlgebraShape((loop(2, 16),)),
)
T_GRID = np.linspace(0, 1, 65)


def _valid_paths(seed, count, n_samples=129):
    rng = np.random.default_rng(seed)
    out, rejected = [], 0
    while len(out) < count:
        shape = SHAPES[len(out) % len(SHAPES)]
        p = random_path(rng, shape, 1, n_samples)
        if validate_path(p).verdict == "valid":
            out.append(p)
        else:
            rejected += 1
    return out, rejected


def _pair_path(rng, shape, sweep=4.0):
    while True:
        c0, loops = random_lagrangian_curve(rng, shape, 1, T_GRID, sweep)
        c1, _ = random_lagrangian_curve(rng, shape, 1, T_GRID, sweep, loops)
        lp = LagrangianPath.from_curves(c0, c1)
        try:
            return lp, maslov_pair(lp)[0]
        except (NotTransverse, UnresolvedCrossing):
            continue


def test_criterion_01_triple_route_agreement():
    paths, _ = _valid_paths(101, 200)
    for p in paths:
        w = spectral_flow_winding(p).value
        assert spectral_flow_sections(p).value == w
        assert spectral_flow_crossings(p).value == w
        assert dense_crossing_oracle(p) == w


def test_criterion_02_normalization():
    rng = np.random.default_rng(102)
    for shape in (AlgebraShape((scalar(4),)), AlgebraShape((scalar(3), loop(2, 16)))):
        n = shape[0].dim
        for r in range(n + 1):
            for _ in range(3):
                ranks = [r] + [int(rng.integers(s.dim + 1)) for s in shape[1:]]
                P = random_projection(rng, shape, 1, ranks=ranks)
                assert spectral_flow(axiom_v_path(P)).value.components == tuple(projection_ranks(P))


def test_criterion_03_endpoint_law():
    paths, _ = _valid_paths(103, 100)
    for p in paths:
        flow = spectral_flow(p).value.components
        ends = endpoint_count(p).components
        for b, spec in enumerate(p.shape):
            if not spec.is_loop:
                assert flow[b] == ends[b]


def test_criterion_04_path_axioms():
    rng = np.random.default_rng(104)
    shape = AlgebraShape((scalar(2), loop(1, 8)))
    zero = KZeroClass.zero(shape)
    n = 0
    while n < 100:
        p, q = random_path(rng, shape, 1), random_path(rng, shape, 1)
        if validate_path(p).verdict != "valid" or validate_path(q).verdict != "valid":
            continue
        fp, fq = spectral_flow(p).value, spectral_flow(q).value
        # q' joins p(1) to a fresh endpoint so the concatenation is defined
        shift = np.linspace(0, 1, q.n_samples)
        qj = HermPath(shape, 1, q.t, [Bq + (1 - shift)[:, None, None, None] * (Bp[-1] - Bq[0])[None]
                                       for Bp, Bq in zip(p.blocks, q.blocks)])
        if validate_path(qj).verdict != "valid":
            continue
        fqj = spectral_flow(qj).value
        assert spectral_flow(concatenate(p, qj)).value == fp + fqj
        assert spectral_flow(reverse(p)).value == -fp
        assert spectral_flow(direct_sum(p, q)).value == fp + fq
        assert spectral_flow(concatenate(p, reverse(p))).value == zero
        n += 1


def test_criterion_05_relative_index_uniqueness():
    rng = np.random.default_rng(105)
    for i in range(200):
        shape = SHAPES[i % len(SHAPES)]
        pp = ProjectionPair(random_projection(rng, shape, 2), random_projection(rng, shape, 2))
        assert rel_index_fredholm(pp) == rel_index_crossing(pp)
    for shape in SHAPES[2:]:
        report = rel_index_axiom_suite(shape, trials=20, seed=105)
        assert report.ok, report.failures


def test_criterion_06_normalizing_invariance():
    rng = np.random.default_rng(106)
    paths, _ = _valid_paths(106, 40)
    for p in paths:
        fp = spectral_flow(p).value
        for _ in range(5):
            assert spectral_flow(normalizing_transform(p, _random_odd_monotone(rng))).value == fp


def test_criterion_07_maslov_properties():
    rng = np.random.default_rng(107)
    shape = AlgebraShape((scalar(2), loop(1, 8)))
    homotopies = 0
    while homotopies < 20:
        lp, mu = _pair_path(rng, shape)
        assert maslov_pair(lp.swapped())[0] == -mu
        for hom in (Evaluation(1, int(rng.integers(8))), Rotation(1, int(rng.integers(1, 8)))):
            assert maslov_pair(lp.apply(hom))[0] == pushforward(mu, hom)
        # endpoint-fixing homotopy u1(t) -> exp(i s sin(pi t) K) u1(t), s in [0, 1]
        Ks = [random_hermitian(rng, B.shape[-1], 0.5) for B in lp.u1]
        for s in (0.25, 0.5, 0.75, 1.0):
            u1 = [np.array([expm(1j * s * np.sin(np.pi * tv) * K) for tv in lp.t])[:, None] @ B
                  for K, B in zip(Ks, lp.u1)]
            assert maslov_pair(LagrangianPath(shape, 1, lp.t, lp.u0, u1))[0] == mu
        homotopies += 1


def test_criterion_08_interval_oracle():
    rng = np.random.default_rng(108)
    for i in range(50):
        k = 1 + i % 3
        u0, u1 = random_unitary(rng, k), random_unitary(rng, k)
        dips = shooting_spectrum(u0, u1)
        lam = interval_spectrum(u0.conj().T @ u1, (-np.pi, np.pi))
        assert dips.size == lam.size
        assert_allclose(dips, lam, atol=TOL_SHOOT, rtol=0)
    shape = AlgebraShape((scalar(2), loop(1, 8)))
    for _ in range(50):
        lp, mu = _pair_path(rng, shape)
        assert shooting_maslov(lp) == mu


def test_criterion_09_sign_constants():
    rec = pin_sign_constants()
    assert rec == {k: getattr(_signs, k) for k in SIGN_NAMES}
    assert json.loads((ROOT / "docs" / "sign_constants.json").read_text()) == rec


def test_criterion_10_triple_index():
    rng = np.random.default_rng(110)
    shape = AlgebraShape((scalar(2), loop(1, 8)))
    n = 0
    while n < 100:
        loops = None
        Ls = []
        for _ in range(3):
            c, loops = random_lagrangian_curve(rng, shape, 1, [0.0, 1.0], 1.0, loops)
            Ls.append(Lagrangian(AElement(shape, 1, tuple(B[0] for B in c.blocks))))
        us = [L.u.blocks for L in Ls]
        gaps = [min_transversality(a, b).min() for i in range(3)
                for a, b in zip(us[i], us[(i + 1) % 3])]
        if min(gaps) < TRIPLE_MARGIN:
            continue
        _, diag = maslov_triple(*Ls)
        assert diag["route_difference"] < TOL_TRIPLE_CROSS
        assert diag["hermiticity_defect"] < TOL_TRIPLE_HERM
        n += 1
    n = 0
    while n < 50:
        loops, curves = None, []
        for _ in range(3):
            c, loops = random_lagrangian_curve(rng, shape, 1, T_GRID, 2.0, loops)
            curves.append(c)
        ends = [[B[i] for B in c.blocks] for c in curves for i in (0, -1)]
        gaps = [min_transversality(a, b).min() for j in (0, 1)
                for i in range(3) for a, b in zip(ends[2 * i + j], ends[2 * ((i + 1) % 3) + j])]
        if min(gaps) < TRIPLE_MARGIN:
            continue
        try:
            res = triple_pair_identity(*curves)
        except UnresolvedCrossing:
            continue
        assert res["equal"], res
        n += 1


def test_criterion_11_suspension_even_to_odd():
    rng = np.random.default_rng(111)
    n = 0
    while n < 100:
        shape = AlgebraShape((scalar(1 + n % 3),))
        p = random_path(rng, shape, 1)
        if validate_path(p).verdict != "valid":
            continue
        assert suspend_even_to_odd(p)["equal"]
        n += 1


def test_criterion_12_suspension_odd_to_even():
    rng = np.random.default_rng(112)
    for i in range(30):
        rank = 1 + i % 2                        # k = rank on a dim-2 loop block
        w = (int(rng.integers(-2, 3)), int(rng.integers(-2, 3)))
        g = random_graded_path(rng, AlgebraShape((loop(2, 32),)), rank, windings=[w])
        res = suspend_odd_to_even(g)
        assert res["equal"] and res["odd_flow"] == [w[1] - w[0]]


def test_criterion_13_odd_suite():
    rng = np.random.default_rng(113)
    shape = AlgebraShape((loop(1, 32), scalar(1)))
    th = shape[0].thetas()

    def lag(w):
        u = AElement(shape, 2, (unitary_loop(rng, 2, th, w), random_unitary(rng, 2)[None]))
        return LagrangianProjection.from_unitary(u), u

    for _ in range(30):
        (P, _), (Q, _), (R, _) = (lag(int(rng.integers(-3, 4))) for _ in range(3))
        assert odd_rel_index(P, Q) + odd_rel_index(Q, R) == odd_rel_index(P, R)
        V = AElement(shape, 2, (unitary_loop(rng, 2, th, int(rng.integers(-2, 3))), random_unitary(rng, 2)[None]))
        conj = lambda X: LagrangianProjection.from_unitary(V @ X @ V.adjoint())
        (P, u), (Q, v) = lag(1), lag(-1)
        assert odd_rel_index(conj(u), conj(v)) == odd_rel_index(P, Q)
    # odd normalization: W_t = (1-t) u1 + t u2 has flow [u2 u1*]
    t = np.linspace(0, 1, 17)
    for _ in range(10):
        (P1, u1), (P2, u2) = lag(int(rng.integers(-3, 4))), lag(int(rng.integers(-3, 4)))
        W = [np.array([(1 - tv) * a + tv * b for tv in t]) for a, b in zip(u1.blocks, u2.blocks)]
        g = GradedHermPath.from_W(shape, 4, t, W)
        assert odd_spectral_flow(g) == odd_rel_index(P2, P1)
    for i in range(30):
        F = random_almost_involution(rng, AlgebraShape((loop(1 + i % 3, 16), scalar(2))), 1)
        assert suspend_bounded_check(F)["equal"]


def test_criterion_14_splitting_correction():
    rng = np.random.default_rng(114)
    for i in range(30):
        w = int(rng.integers(-2, 3))
        kr = 1 + i % 2
        D, L0, L1 = random_kernel_instance(rng, k=3, kernel_rank=kr, winding=w)
        res = splitting_correction_check(D, L0, L1, kernel_rank=kr)
        # u1 = u0 diag(e^{i w th}, 1, ...) so det(u0 u1*) winds -w times
        assert res["equal"] and res["pair_class"] == [-w]


def test_criterion_15_divergence_fixture():
    counts = []
    for dim in (8, 16, 32):
        p = divergence_path(dim)
        assert validate_path(p).verdict != "valid"
        counts.append(naive_crossing_count(p))
    assert counts[0] < counts[1] < counts[2]


def _run_all(out_dir, threads):
    outs = {}
    for src in sorted((ROOT / "problems").glob("*.json")):
        dst = out_dir / f"{src.stem}.json"
        with contextlib.redirect_stderr(io.StringIO()):
            cli.main(["--input", str(src), "--output", str(dst), "--threads", str(threads)])
        outs[src.stem] = dst.read_bytes()
    return outs


def test_criterion_16_cli_determinism(tmp_path):
    runs = []
    for i, threads in enumerate((1, 4, 4)):
        d = tmp_path / f"run{i}"
        d.mkdir()
        runs.append(_run_all(d, threads))
    assert len(runs[0]) == 14
    assert runs[0] == runs[1] == runs[2]
