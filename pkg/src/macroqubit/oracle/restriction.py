r"""Restricted analyzer POVM computed by brute force on the Fock basis.

For each pair of input basis states ``|k>, |l>`` of ``{|+>, |->, |0>}`` the
operator ``|l><k|`` is pushed through cloner and loss with explicit Kraus
operators (or a unitary, or the measure-&-prepare quadrature) and the
analyzer POVM elements are evaluated on the result.  The analyzer elements
are diagonal in the Fock basis, so only output photon-number distributions
are ever formed; no generating function is involved.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from ..errors import InvalidArgument, TruncationError
from .channels import coherent_ket, loss_kraus, mp_quadrature_points, universal_kraus
from .operators import destroy

__all__ = [
    "BASIS",
    "squeezed_columns",
    "loss_transfer",
    "single_mode_image_diagonals",
    "output_distributions",
    "restricted_povm_oracle",
    "oracle_cutoff",
]

# |+> = |1, 0>, |-> = |0, 1>, |0> = |0, 0> on (a, a_perp)
BASIS = ((1, 0), (0, 1), (0, 0))
TAIL = 1e-13


def oracle_cutoff(kind: str, strength: float, tail: float = TAIL) -> int:
    """Per-mode cutoff leaving less than about ``tail`` of output population above it."""
    if kind == "measure-prepare":
        a2 = strength
        return int(math.ceil(a2 + 12 * math.sqrt(a2 + 1) + 30))
    t2 = math.tanh(strength) ** 2
    if t2 == 0:
        return 8
    per = 1.0 if kind == "universal" else 2.0
    return int(math.ceil(per * math.log(tail) / math.log(t2))) + 20


def squeezed_columns(g: float, cutoff: int, columns=(0, 1), margin: int | None = None) -> np.ndarray:
    """``exp(g/2 (a^{+2} - a^2)) |n>`` for the listed ``n``, cropped to ``cutoff``.

    Uses a sparse generator on an enlarged space and ``expm_multiply``.
    """
    w = cutoff + (margin if margin is not None else max(40, cutoff // 2))
    a = sp.csr_matrix(destroy(w))
    gen = (0.5 * g) * (a.T @ a.T - a @ a)
    start = np.zeros((w + 1, len(columns)))
    start[list(columns), range(len(columns))] = 1.0
    return expm_multiply(gen.tocsc(), start)[: cutoff + 1]


def loss_transfer(eta: float, cutoff: int) -> np.ndarray:
    """Population map ``T[k, n] = sum_i |<k|K_i|n>|^2`` of the loss channel."""
    return sum(np.abs(k) ** 2 for k in loss_kraus(eta, cutoff))


def single_mode_image_diagonals(kind: str, g: float, cutoff: int) -> dict:
    """Fock diagonals of ``E(|m><n|)`` for ``m, n`` in ``{0, 1}`` (one amplified mode)."""
    out = {}
    if kind == "universal":
        kraus = universal_kraus(g, 1, cutoff)
        for m in (0, 1):
            for n in (0, 1):
                out[(m, n)] = sum(k[:, m] * np.conj(k[:, n]) for k in kraus)
    elif kind == "phase-covariant":
        cols = squeezed_columns(g, cutoff)
        for m in (0, 1):
            for n in (0, 1):
                out[(m, n)] = cols[:, m] * np.conj(cols[:, n])
    else:
        raise InvalidArgument(f"no single-mode image for kind {kind!r}")
    return out


def _mp_joint(alpha2: float, cutoff: int, points: int) -> dict:
    """Joint output photon distributions of the measure-&-prepare cloner (before loss)."""
    alpha = math.sqrt(alpha2)
    d = cutoff + 1
    acc = {key: np.zeros((d, d)) for key in ("pp", "pm", "mm")}
    for phi in 2 * np.pi * np.arange(points) / points:
        c, s = math.cos(phi), math.sin(phi)
        joint = np.outer(coherent_ket(alpha * c, cutoff) ** 2, coherent_ket(alpha * s, cutoff) ** 2)
        acc["pp"] += c * c * joint
        acc["pm"] += c * s * joint
        acc["mm"] += s * s * joint
    for key in acc:
        acc[key] *= 2.0 / points
    return acc


def output_distributions(spec, eta: float, cutoff: int | None = None, points: int | None = None) -> dict:
    """``{(k, l): joint distribution}`` of ``E(|l><k|)`` after loss, ``k, l`` in ``0..2``.

    Raises
    ------
    TruncationError
        If the top Fock level of an amplified mode carries more than ``1e-12``.
    """
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgument(f"eta must lie in [0, 1], got {eta!r}")
    kind = spec.kind
    cutoff = oracle_cutoff(kind, spec.strength) if cutoff is None else int(cutoff)
    tmat = loss_transfer(eta, cutoff)
    d = cutoff + 1
    out = {}
    if kind == "measure-prepare":
        acc = _mp_joint(spec.alpha2, cutoff, mp_quadrature_points(cutoff, points))
        vac = np.zeros((d, d))
        vac[0, 0] = 1.0
        blocks = {(0, 0): acc["pp"], (0, 1): acc["pm"], (1, 0): acc["pm"], (1, 1): acc["mm"], (2, 2): vac}
        top = max(acc["pp"][-1].sum(), acc["pp"][:, -1].sum(), acc["mm"][-1].sum(), acc["mm"][:, -1].sum())
        for k in range(3):
            for l in range(3):
                raw = blocks.get((k, l), np.zeros((d, d)))
                out[(k, l)] = tmat @ raw @ tmat.T
    else:
        img = single_mode_image_diagonals(kind, spec.g, cutoff)
        top = max(abs(img[(1, 1)][-1]), abs(img[(0, 0)][-1]))
        for k, (xk, yk) in enumerate(BASIS):
            for l, (xl, yl) in enumerate(BASIS):
                da = tmat @ img[(xl, xk)]
                dp = tmat @ img[(yl, yk)]
                out[(k, l)] = np.outer(da, dp)
    if top > 1e-12:
        raise TruncationError(f"output population {top:.3g} at cutoff {cutoff}", mode="a", tail=top)
    return out


def restricted_povm_oracle(spec, det, cutoff: int | None = None, points: int | None = None) -> dict:
    """``{"p_a", "p_aperp", "p_null"}``: 3x3 matrices ``<k|p|l> = tr(P E(|l><k|))``."""
    dists = output_distributions(spec, det.eta, cutoff, points)
    d = next(iter(dists.values())).shape[0]
    ns = (np.arange(d) < det.theta).astype(float)
    sees = 1.0 - ns
    elements = {
        "p_a": np.outer(sees, ns),
        "p_aperp": np.outer(ns, sees),
    }
    elements["p_null"] = 1.0 - elements["p_a"] - elements["p_aperp"]
    out = {}
    for name, diag in elements.items():
        m = np.zeros((3, 3), dtype=complex)
        for (k, l), joint in dists.items():
            m[k, l] = np.sum(diag * joint)
        if np.max(np.abs(m.imag)) > 1e-12:
            raise InvalidArgument("restricted operator came out complex")
        out[name] = m.real
    return out
