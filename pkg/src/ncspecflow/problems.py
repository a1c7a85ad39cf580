"""Builders for the example problem files shipped in ``problems/``.

``python3 -m ncspecflow.problems DIR`` regenerates them.  Every builder is
seeded, so the files are reproducible.
"""

import json
import sys
from pathlib import Path

import numpy as np

from .algebra import AlgebraShape, loop, scalar
from .cli import element_to_json, path_to_json
from .fixtures import axiom_v_path, divergence_path, random_path, random_projection
from .oppath import HermPath


def _problem(shape, task, payload, rank=1, config=None):
    d = {"version": "1", "algebra": shape.to_dict(), "rank": rank, "task": task, "payload": payload}
    if config:
        d["config"] = config
    return d


def _carray(A):
    A = np.asarray(A)
    return {"re": np.real(A).tolist(), "im": np.imag(A).tolist()}


def axiom_v():
    shape = AlgebraShape((scalar(3),))
    P = random_projection(np.random.default_rng(5), shape, 1, ranks=[2])
    return _problem(shape, "spectral-flow", {"path": path_to_json(axiom_v_path(P)), "route": "all"})


def constant_path():
    shape = AlgebraShape((scalar(2), loop(1, 8)))
    rng = np.random.default_rng(11)
    from .fixtures import random_invertible_hermitian

    D = random_invertible_hermitian(rng, shape, 2)
    t = np.linspace(0, 1, 5)
    p = HermPath(shape, 2, t, [np.repeat(B[None], len(t), axis=0) for B in D.blocks])
    return _problem(shape, "spectral-flow", {"path": path_to_json(p)}, rank=2)


def divergence():
    p = divergence_path(8)
    return _problem(p.shape, "spectral-flow", {"path": path_to_json(p)})


def validate_random():
    shape = AlgebraShape((scalar(2),))
    p = random_path(np.random.default_rng(3), shape, 1, n_samples=65)
    return _problem(shape, "validate", {"path": path_to_json(p)})


def relative_index():
    shape = AlgebraShape((scalar(3), loop(1, 8)))
    rng = np.random.default_rng(7)
    P = random_projection(rng, shape, 2)
    Q = random_projection(rng, shape, 2)
    return _problem(shape, "relative-index", {"P": element_to_json(P), "Q": element_to_json(Q)}, rank=2)


def maslov():
    shape = AlgebraShape((scalar(1),))
    t = np.linspace(0, 1, 40)
    u0 = [[[[1.0]]] for _ in t]
    u1 = [[[[np.exp(1j * (np.pi + 2 * np.pi * tv))]]] for tv in t]
    return _problem(shape, "maslov", {"t": t.tolist(), "u0": _carray(u0), "u1": _carray(u1)})


def maslov_triple():
    shape = AlgebraShape((scalar(1),))
    return _problem(shape, "maslov-triple", {"u0": _carray([[[1.0]]]), "u1": _carray([[[-1.0]]]),
                                             "u2": _carray([[[1j]]])})


def _winding_W(w=1, N=16, T=17):
    t = np.linspace(0, 1, T)
    th = 2 * np.pi * np.arange(N) / N
    return t, np.array([[[[(1 - tv) + tv * np.exp(1j * w * a)]] for a in th] for tv in t])


def odd_flow():
    from .oddflow import odd_from_W

    shape = AlgebraShape((loop(1, 16),))
    t, W = _winding_W()
    p = HermPath(shape, 2, t, [odd_from_W(W)])
    return _problem(shape, "odd-spectral-flow", {"path": path_to_json(p)}, rank=2)


def odd_relative_index():
    shape = AlgebraShape((loop(2, 16),))
    th = shape[0].thetas()
    uP = np.array([[[np.exp(1j * a), 0], [0, 1]] for a in th])
    uQ = np.array([np.eye(2, dtype=complex) for _ in th])

    def proj(u):
        eye = np.broadcast_to(np.eye(2), u.shape)
        top = np.concatenate([eye, np.swapaxes(u, -1, -2).conj()], axis=-1)
        return 0.5 * np.concatenate([top, np.concatenate([u, eye], axis=-1)], axis=-2)

    return _problem(shape, "odd-relative-index", {"P": _carray([proj(uP)]), "Q": _carray([proj(uQ)])},
                    rank=2)


def suspend_even():
    shape = AlgebraShape((scalar(1),))
    t = np.linspace(0, 1, 33)
    p = HermPath(shape, 1, t, [(2 * t - 1).reshape(-1, 1, 1, 1)])
    return _problem(shape, "suspend-check", {"path": path_to_json(p), "direction": "even-to-odd"})


def suspend_odd():
    from .oddflow import odd_from_W

    shape = AlgebraShape((loop(1, 32),))
    t, W = _winding_W(N=32)
    p = HermPath(shape, 2, t, [odd_from_W(W)])
    return _problem(shape, "suspend-check", {"path": path_to_json(p), "direction": "odd-to-even"},
                    rank=2)


def oracle_interval():
    shape = AlgebraShape((scalar(2),))
    u1 = np.diag([np.exp(0.7j), -1.0])
    return _problem(shape, "oracle-interval", {"u0": _carray(np.eye(2)), "u1": _carray(u1),
                                               "window": [-4.0, 4.0]})


def axiom_suite_flow():
    shape = AlgebraShape((scalar(1), loop(1, 8)))
    return _problem(shape, "axiom-suite", {"suite": "flow", "trials": 4}, rank=2)


def axiom_suite_relindex():
    shape = AlgebraShape((scalar(2), loop(1, 8)))
    return _problem(shape, "axiom-suite", {"suite": "relative-index", "trials": 8}, rank=2)


BUILDERS = {
    "axiom_v": axiom_v,
    "constant_path": constant_path,
    "divergence": divergence,
    "validate_random": validate_random,
    "relative_index": relative_index,
    "maslov": maslov,
    "maslov_triple": maslov_triple,
    "odd_flow": odd_flow,
    "odd_relative_index": odd_relative_index,
    "suspend_even": suspend_even,
    "suspend_odd": suspend_odd,
    "oracle_interval": oracle_interval,
    "axiom_suite_flow": axiom_suite_flow,
    "axiom_suite_relindex": axiom_suite_relindex,
}


def write_problems(directory) -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, fn in BUILDERS.items():
        path = directory / f"{name}.json"
        path.write_text(json.dumps(fn(), sort_keys=True) + "\n")
        written.append(path)
    return written


if __name__ == "__main__":
    for path in write_problems(sys.argv[1] if len(sys.argv) > 1 else "problems"):
        print(path)
