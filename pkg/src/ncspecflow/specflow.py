"""Even spectral flow of sampled hermitian paths.

Three independent routes compute the same K0 class:

``spectral_flow_sections``
    junction algorithm: the path is cut into segments that admit a common
    gap level ``a``; on each segment the shifted projections
    ``1_{>= -a}(D_t)`` are continuous, and the flow is the sum of relative
    indices where consecutive sections meet, plus the two endpoint terms.
``spectral_flow_winding``
    determinant winding of the unitary loop ``t -> U(chi(D_t))`` with
    ``U(x) = exp(i pi (x + 1))``.
``spectral_flow_crossings``
    net number of matched eigenvalue curves crossing zero upward.

The winding route is the default public route; the other two exist to
cross-check it.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _signs, matfun
from .algebra import AElement, KZeroClass, block_diag_stack, pushforward
from .errors import (
    CrossCheckFailed,
    EndpointMismatch,
    InvalidPath,
    SamplingTooCoarse,
    ShapeMismatch,
    ThetaInconsistent,
    UnresolvedCrossing,
)
from .oppath import (
    DEFAULT_GAP_MIN,
    DEFAULT_REFINE_MAX,
    HermPath,
    _level_candidates,
    find_segments,
    trivializing_operator,
    validate_path,
)
from .relindex import AxiomReport, rel_index


@dataclass
class FlowResult:
    """Spectral flow value with the data it was computed from."""

    value: KZeroClass
    route: str
    diagnostics: dict = field(default_factory=dict)


def _require_valid(p, gap_min, motion_cap=None):
    v = validate_path(p, gap_min, motion_cap)
    if v.verdict != "valid":
        raise InvalidPath(f"path verdict is {v.verdict}: {'; '.join(v.reasons)}", v)
    return v


def _theta_constant(values, b, what):
    vals = set(values)
    if len(vals) != 1:
        raise ThetaInconsistent(f"{what} varies with theta on block {b}: {sorted(vals)}")
    return vals.pop()


# ----------------------------------------------------------- sections route

def _nonneg_projection(D: AElement) -> AElement:
    out = []
    for B in D.blocks:
        w, V = np.linalg.eigh(B)
        scale = 1 + np.abs(w).max()
        if np.min(np.abs(w)) < matfun.ZERO_RTOL * scale:
            raise CrossCheckFailed("section operator is not invertible")
        mask = (w > 0).astype(float)
        out.append(np.einsum("sij,sj,skj->sik", V, mask, V.conj()))
    return AElement(D.shape, D.rank, tuple(out))


def _section(D: AElement, a: float) -> AElement:
    """``1_{>=0}(D + A)`` with ``A = 2a 1_{[-a,a]}(D)``, i.e. ``1_{>= -a}(D)``."""
    return _nonneg_projection(D + trivializing_operator(D, a))


def spectral_flow_sections(p: HermPath, gap_min=DEFAULT_GAP_MIN, segments=None,
                           strategy="greedy", rng=None) -> FlowResult:
    """Spectral flow by the junction algorithm over generalized spectral sections.

    Parameters
    ----------
    p : HermPath
        Valid path.
    segments : list of Segment, optional
        Precomputed segmentation; by default :func:`find_segments` is called
        with `strategy` and `rng`.
    """
    _require_valid(p, gap_min)
    segs = segments if segments is not None else find_segments(p, gap_min, strategy, rng)
    first, last = p.sample(0), p.sample(p.n_samples - 1)

    terms = []
    start = rel_index(_section(first, segs[0].level), _nonneg_projection(first))
    terms.append({"t": 0.0, "kind": "start", "index": list(start.components)})
    total = start
    for prev, seg in zip(segs[:-1], segs[1:]):
        D = p.sample(seg.start)
        j = rel_index(_section(D, seg.level), _section(D, prev.level))
        terms.append({"t": float(p.t[seg.start]), "kind": "junction", "index": list(j.components)})
        total = total + j
    end = rel_index(_nonneg_projection(last), _section(last, segs[-1].level))
    terms.append({"t": 1.0, "kind": "end", "index": list(end.components)})
    total = total + end

    diagnostics = {
        "segments": [{"start": float(p.t[s.start]), "stop": float(p.t[s.stop]), "level": s.level}
                     for s in segs],
        "junction_indices": terms,
    }
    return FlowResult(total, "sections", diagnostics)


# ------------------------------------------------------------ winding route

def _bounded(x):
    return x / np.sqrt(1 + x * x)


def normalizing_chi(g: float):
    """``chi(x) = clamp(b(x) / b(g), -1, 1)`` with ``b(x) = x / sqrt(1 + x^2)``.

    Odd, non-decreasing, equal to ``sign(x)`` for ``|x| >= g``.  Its
    Lipschitz constant is ``1 / b(g)``.
    """
    bg = _bounded(g)
    return lambda x: np.clip(_bounded(x) / bg, -1.0, 1.0)


def winding_unitary(D: np.ndarray, chi) -> np.ndarray:
    """``U(chi(D))`` with ``U(x) = exp(i pi (x + 1))``."""
    w, V = np.linalg.eigh(D)
    return (V * np.exp(1j * np.pi * (chi(w) + 1))[..., None, :]) @ np.swapaxes(V, -1, -2).conj()


def _det_phase_of_winding_unitary(mats, chi):
    w, V = np.linalg.eigh(mats)
    U = np.einsum("...ij,...j,...kj->...ik", V, np.exp(1j * np.pi * (chi(w) + 1)), V.conj())
    return np.linalg.slogdet(U)[0], w


def _raw_loop_winding(mats, chi, lip, g, refine_max):
    """Winding of ``det U(chi(D_t))`` along the linear interpolant of `mats`.

    Each step is bisected until the Weyl bound
    ``pi * lip * n_active * ||dD|| < pi/2`` certifies that the principal
    branch of the det-phase increment is the true increment.
    """
    phases, w = _det_phase_of_winding_unitary(mats, chi)
    steps = np.linalg.norm(np.diff(mats, axis=0), 2, axis=(-2, -1))
    n_active = np.sum(np.abs(w[:-1]) < (g + steps)[:, None], axis=-1)
    certified = np.pi * lip * n_active * steps < matfun.PHASE_STEP_MAX

    total = 0.0
    n_refined = 0
    for i in range(len(mats) - 1):
        if certified[i]:
            incs = [np.angle(phases[i + 1] * np.conj(phases[i]))]
        else:
            incs, n = _refined_increments(mats[i], mats[i + 1], phases[i], chi, lip, g, refine_max)
            n_refined += n
        for inc in incs:
            if abs(inc) >= matfun.PHASE_STEP_MAX:
                raise SamplingTooCoarse("det phase step reached pi/2 despite certificate")
            total += float(inc)
    w = total / (2 * np.pi)
    if abs(w - round(w)) > 1e-6:
        raise CrossCheckFailed(f"winding route produced a non-integer winding {w}")
    return int(round(w)), n_refined


def _refined_increments(Da, Db, ph_a, chi, lip, g, refine_max):
    """Phase increments over one step after bisecting until certified (left to right)."""
    incs = []
    n_refined = 0
    ph_prev = ph_a
    todo = [(Da, Db, 0)]
    while todo:
        Da, Db, depth = todo.pop()
        step = float(np.linalg.norm(Db - Da, 2))
        n_active = int(np.sum(np.abs(np.linalg.eigvalsh(Da)) < g + step))
        if np.pi * lip * n_active * step >= matfun.PHASE_STEP_MAX:
            if depth >= refine_max:
                raise SamplingTooCoarse("winding route: refinement cap reached")
            Dm = 0.5 * (Da + Db)
            todo.append((Dm, Db, depth + 1))
            todo.append((Da, Dm, depth + 1))
            n_refined += 1
            continue
        ph = _det_phase_of_winding_unitary(Db[None], chi)[0][0]
        incs.append(float(np.angle(ph * np.conj(ph_prev))))
        ph_prev = ph
    return incs, n_refined


def spectral_flow_winding(p: HermPath, gap_min=DEFAULT_GAP_MIN, refine_max=DEFAULT_REFINE_MAX,
                          sign=None) -> FlowResult:
    """Spectral flow as the winding number of ``t -> det U(chi(D_t))``.

    ``chi`` is :func:`normalizing_chi` with ``g`` half the endpoint gap, so
    ``U(chi(D_0)) = U(chi(D_1)) = 1`` and the sampled family is a closed
    loop.  The result is multiplied by the frozen orientation constant
    ``SIGMA_E`` (pass `sign` to override, as the sign-pinning oracle does).
    """
    v = _require_valid(p, gap_min)
    sign = _signs.SIGMA_E if sign is None else sign
    g = 0.5 * v.endpoint_gap
    chi = normalizing_chi(g)
    lip = 1.0 / _bounded(g)
    comps, per_theta, refined = [], [], []
    for b, B in enumerate(p.blocks):
        ws = []
        nref = 0
        for s in range(B.shape[1]):
            w, n = _raw_loop_winding(B[:, s], chi, lip, g, refine_max)
            ws.append(w)
            nref += n
        per_theta.append(ws)
        refined.append(nref)
        comps.append(sign * _theta_constant(ws, b, "winding"))
    diagnostics = {"chi_gap": g, "raw_windings": per_theta, "sign": sign,
                   "refinements": refined}
    return FlowResult(KZeroClass(p.shape, tuple(comps)), "winding", diagnostics)


# ----------------------------------------------------------- crossing route

def _resolve_points(p, b, s, tol, refine_max):
    """Evaluation times and matrices for block `b`, theta `s`, avoiding zero eigenvalues.

    Interior samples with an eigenvalue within `tol` of zero are replaced by
    two nearby points of the linear interpolant, moved closer each round.
    """
    B = p.blocks[b][:, s]
    w_all = p.eigenvalues(b)[:, s]
    ts, mats = [p.t[0]], [B[0]]
    for i in range(1, p.n_samples - 1):
        if np.min(np.abs(w_all[i])) > tol:
            ts.append(p.t[i])
            mats.append(B[i])
            continue
        h = 0.5 * min(p.t[i] - p.t[i - 1], p.t[i + 1] - p.t[i])
        for _ in range(refine_max):
            left = B[i] + (h / (p.t[i] - p.t[i - 1])) * (B[i - 1] - B[i])
            right = B[i] + (h / (p.t[i + 1] - p.t[i])) * (B[i + 1] - B[i])
            if min(np.abs(np.linalg.eigvalsh(left)).min(), np.abs(np.linalg.eigvalsh(right)).min()) > tol:
                ts += [p.t[i] - h, p.t[i] + h]
                mats += [left, right]
                break
            h *= 0.5
        else:
            raise UnresolvedCrossing(f"eigenvalue stuck at zero near t={p.t[i]:g} (block {b})")
    ts.append(p.t[-1])
    mats.append(B[-1])
    return np.array(ts), np.array(mats)


def _count_crossings(ts, w, perms, b, s):
    m = w.shape[-1]
    idx = np.arange(m)
    crossings = []
    net = 0
    for i in range(len(ts) - 1):
        nxt = perms[i][idx]
        a, c = w[i][idx], w[i + 1][nxt]
        for curve in range(m):
            if a[curve] < 0 < c[curve] or a[curve] > 0 > c[curve]:
                d = 1 if c[curve] > 0 else -1
                tc = ts[i] + (ts[i + 1] - ts[i]) * a[curve] / (a[curve] - c[curve])
                crossings.append({"t": float(tc), "direction": d, "block": b,
                                  "theta_index": s, "curve": curve})
                net += d
        idx = nxt
    return net, crossings


def spectral_flow_crossings(p: HermPath, gap_min=DEFAULT_GAP_MIN, refine_max=DEFAULT_REFINE_MAX,
                            tol_zero=None) -> FlowResult:
    """Spectral flow as the net number of upward zero crossings of matched curves."""
    _require_valid(p, gap_min)
    comps, crossings = [], []
    for b, B in enumerate(p.blocks):
        tol = tol_zero if tol_zero is not None else matfun.ZERO_RTOL * (1 + np.abs(p.eigenvalues(b)).max())
        nets = []
        for s in range(B.shape[1]):
            w_s = p.eigenvalues(b)[:, s]
            if np.all(np.abs(w_s[1:-1]) > tol):
                ts, w, perms = p.t, w_s, p.step_permutations(b)[:, s]
            else:
                ts, mats = _resolve_points(p, b, s, tol, refine_max)
                w, V = np.linalg.eigh(mats)
                perms = np.array([matfun.match_overlaps(V[i], V[i + 1]) for i in range(len(ts) - 1)])
            net, cr = _count_crossings(ts, w, perms, b, s)
            nets.append(net)
            crossings += cr
        comps.append(_theta_constant(nets, b, "crossing count"))
    crossings.sort(key=lambda c: (c["t"], c["block"], c["theta_index"], c["curve"]))
    return FlowResult(KZeroClass(p.shape, tuple(comps)), "crossings", {"crossings": crossings})


# ------------------------------------------------------------ public entry

ROUTES = {
    "winding": spectral_flow_winding,
    "sections": spectral_flow_sections,
    "crossings": spectral_flow_crossings,
}


def spectral_flow(p: HermPath, route="winding", **kw) -> FlowResult:
    return ROUTES[route](p, **kw)


def spectral_flow_all_routes(p: HermPath, gap_min=DEFAULT_GAP_MIN, refine_max=DEFAULT_REFINE_MAX):
    """Run the three routes and raise CrossCheckFailed if they disagree."""
    results = {
        "winding": spectral_flow_winding(p, gap_min, refine_max),
        "sections": spectral_flow_sections(p, gap_min),
        "crossings": spectral_flow_crossings(p, gap_min, refine_max),
    }
    values = {k: r.value.components for k, r in results.items()}
    if len(set(values.values())) != 1:
        raise CrossCheckFailed(f"spectral flow routes disagree: {values}")
    return results


def endpoint_count(p: HermPath) -> KZeroClass:
    """``n_-(D_0) - n_-(D_1)`` per block (read at the first theta sample)."""
    comps = []
    for b in range(len(p.shape)):
        w = p.eigenvalues(b)
        comps.append(int(np.sum(w[0, 0] < 0)) - int(np.sum(w[-1, 0] < 0)))
    return KZeroClass(p.shape, tuple(comps))


# ------------------------------------------------------ path operations

def concatenate(p: HermPath, q: HermPath, atol=1e-10) -> HermPath:
    """``p`` on ``[0, 1/2]`` followed by ``q`` on ``[1/2, 1]``."""
    if p.shape != q.shape or p.rank != q.rank:
        raise ShapeMismatch("paths live over different modules")
    for Bp, Bq in zip(p.blocks, q.blocks):
        if not np.allclose(Bp[-1], Bq[0], atol=atol, rtol=0):
            raise EndpointMismatch("p(1) != q(0)")
    t = np.concatenate([0.5 * p.t, 0.5 + 0.5 * q.t[1:]])
    blocks = [np.concatenate([Bp, Bq[1:]]) for Bp, Bq in zip(p.blocks, q.blocks)]
    return HermPath(p.shape, p.rank, t, blocks)


def reverse(p: HermPath) -> HermPath:
    return HermPath(p.shape, p.rank, 1 - p.t[::-1], [B[::-1] for B in p.blocks])


def direct_sum(p: HermPath, q: HermPath) -> HermPath:
    """Samplewise ``diag(p, q)`` (module rank adds); grids are merged if they differ."""
    if p.shape != q.shape:
        raise ShapeMismatch("paths over different algebras")
    if p.t.size != q.t.size or not np.allclose(p.t, q.t, atol=1e-14, rtol=0):
        t = np.union1d(p.t, q.t)
        p, q = p.resampled(t), q.resampled(t)
    blocks = [block_diag_stack(Bp, Bq) for Bp, Bq in zip(p.blocks, q.blocks)]
    return HermPath(p.shape, p.rank + q.rank, p.t, blocks)


def shifted(p: HermPath, A: AElement) -> HermPath:
    """The path ``D_t + A`` for a constant element `A`."""
    return HermPath(p.shape, p.rank, p.t, [B + Ab[None] for B, Ab in zip(p.blocks, A.blocks)])


def default_gap_level(D: AElement) -> float:
    """Smallest mid-gap level of ``|spec D|`` that is safely off the spectrum."""
    spec = np.concatenate([np.abs(np.linalg.eigvalsh(B)).ravel() for B in D.blocks])
    top = float(spec.max()) + 1.0
    for a in _level_candidates(spec, top):
        if np.min(np.abs(spec - a)) > 1e-6 * (1 + top):
            return a
    return top


def loop_spectral_flow(p: HermPath, a=None, route="winding", gap_min=DEFAULT_GAP_MIN) -> FlowResult:
    """Flow of a loop ``D_0 = D_1`` made invertible at both ends by the same ``A``.

    ``A = trivializing_operator(D_0, a)``; the default level is the smallest
    mid-gap level of ``|spec D_0|``.
    """
    for B in p.blocks:
        if not np.array_equal(B[0], B[-1]):
            raise EndpointMismatch("loop flow needs D_0 == D_1 exactly")
    D0 = p.sample(0)
    a = default_gap_level(D0) if a is None else float(a)
    A = trivializing_operator(D0, a)
    res = spectral_flow(shifted(p, A), route, gap_min=gap_min)
    res.diagnostics["gap_level"] = a
    return res


# ------------------------------------------------------------ axiom suite

def _random_odd_monotone(rng):
    # slopes over |x| <= 4 stay within a factor of about 5 of f'(0), so the
    # transformed path is still resolved by the original grid
    k = int(rng.integers(4))
    if k == 0:
        c1, c2 = rng.uniform(0.2, 3.0), rng.uniform(0.0, 0.08)
        return lambda x: c1 * (x + c2 * x ** 3)
    if k == 1:
        c1, c2 = rng.uniform(0.1, 1.0), rng.uniform(0.3, 2.0)
        return lambda x: np.arctan(c1 * x) + c2 * x
    if k == 2:
        c1, c3 = rng.uniform(0.1, 0.4), rng.uniform(0.2, 3.0)
        return lambda x: np.tanh(c1 * x) * c3
    c1, c2 = rng.uniform(0.1, 0.6), rng.uniform(0.3, 3.0)
    return lambda x: np.sinh(c1 * x) / c2


def flow_axiom_suite(shape, trials=50, seed=0, rank=2, n_samples=129) -> AxiomReport:
    """Randomized check of the spectral-flow axioms and route agreement.

    Trial ``i`` uses seed ``seed + i`` for every random choice it makes.
    """
    from .fixtures import axiom_v_path, projection_ranks, random_path, random_projection
    from .oppath import normalizing_transform
    from .relindex import _homomorphisms

    report = AxiomReport()
    for i in range(trials):
        s = seed + i
        rng = np.random.default_rng(s)
        p = random_path(rng, shape, rank, n_samples)
        q = random_path(rng, shape, rank, n_samples)
        res = spectral_flow_all_routes(p)
        fp = res["winding"].value
        report.record("endpoint_law", fp == endpoint_count(p), s)
        seg = spectral_flow_sections(p, strategy="random", rng=rng).value
        report.record("segmentation_independence", seg == fp, s)
        fq = spectral_flow(q).value
        report.record("direct_sum", spectral_flow(direct_sum(p, q)).value == fp + fq, s)
        report.record("reversal", spectral_flow(reverse(p)).value == -fp, s)
        # concatenation needs matching endpoints: bridge p(1) to q(0) through a straight line
        bridge = HermPath(shape, rank, np.linspace(0, 1, n_samples),
                          [np.array([(1 - tv) * Bp[-1] + tv * Bq[0] for tv in np.linspace(0, 1, n_samples)])
                           for Bp, Bq in zip(p.blocks, q.blocks)])
        pq = concatenate(concatenate(p, bridge), q)
        fb = spectral_flow(bridge).value
        report.record("concatenation", spectral_flow(pq).value == fp + fb + fq, s)
        report.record("symmetric_vanishing", spectral_flow(concatenate(p, reverse(p))).value
                      == KZeroClass.zero(shape), s)
        f = _random_odd_monotone(rng)
        report.record("normalizing_invariance", spectral_flow(normalizing_transform(p, f)).value == fp, s)
        P = random_projection(rng, shape, rank)
        report.record("normalization", spectral_flow(axiom_v_path(P)).value.components
                      == tuple(projection_ranks(P)), s)
        for hom in _homomorphisms(shape, rng):
            ok = spectral_flow(p.apply(hom)).value == pushforward(fp, hom)
            report.record("functoriality", ok, s, detail=repr(hom))
    return report
