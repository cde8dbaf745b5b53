"""Operator-reordering identities checked by dense matrix algebra.

Each function builds both sides of a normal-ordered factorization on a
truncated Fock space and returns the largest entrywise difference on the
low-occupation block.  The ordered side is exact there at any cutoff.  The
squeezing generators leak population towards the cutoff, so their direct
exponential is taken on a larger space (``embed``) and then cropped.

* one-mode squeezing ``exp(g/2 (a+^2 - a^2)) = e^{T a+^2/2} C^{-n-1/2} e^{-T a^2/2}``
* two-mode squeezing ``exp(g (a+ c+ - a c)) = e^{T a+ c+} C^{-(n_a + n_c + 1)} e^{-T a c}``
* beam splitter ``exp(gamma (a+ e - a e+)) = e^{-tan(gamma) a e+} cos(gamma)^{n_a - n_e} e^{tan(gamma) a+ e}``

with ``T = tanh g`` and ``C = cosh g``.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

from ..errors import InvalidArgument
from .operators import create, destroy

__all__ = [
    "squeeze_reorder_residual",
    "two_mode_reorder_residual",
    "beam_splitter_reorder_residual",
    "beam_splitter_kraus_residual",
    "characteristic_function_residual",
]


def _check_cutoff(cutoff):
    if cutoff < 2:
        raise InvalidArgument(f"cutoff must be >= 2, got {cutoff}")


def _power_diag(base: float, exponents: np.ndarray) -> np.ndarray:
    return np.diag(np.power(base, exponents))


def _direct_columns(generator_at, cutoff, embed, modes, cols):
    """``exp(G)`` restricted to the given basis columns, computed at cutoff ``embed``
    and cropped back to ``cutoff`` per mode."""
    gen = sp.csc_matrix(generator_at(embed))
    de, d = embed + 1, cutoff + 1
    idx = np.array(cols)
    if modes == 1:
        emb_idx = idx
    else:
        emb_idx = (idx // d) * de + idx % d
    start = np.zeros((gen.shape[0], len(idx)))
    start[emb_idx, np.arange(len(idx))] = 1.0
    out = expm_multiply(gen, start)
    if modes == 1:
        return out[:d]
    return out.reshape(de, de, -1)[:d, :d].reshape(d * d, -1)


def squeeze_reorder_residual(g: float, cutoff: int = 20, block: int | None = None,
                             embed: int | None = None) -> float:
    """Max difference on ``n, m <= block`` (default ``cutoff // 2``) for one-mode squeezing."""
    _check_cutoff(cutoff)
    block = cutoff // 2 if block is None else block
    embed = cutoff + 100 if embed is None else max(embed, cutoff)
    a, ad = destroy(cutoff), create(cutoff)
    t, c = math.tanh(g), math.cosh(g)
    n = np.arange(cutoff + 1)
    cols = np.arange(block + 1)

    def gen(k):
        b = destroy(k)
        return 0.5 * g * (b.T @ b.T - b @ b)

    direct = np.zeros((cutoff + 1, cutoff + 1))
    direct[:, cols] = _direct_columns(gen, cutoff, embed, 1, cols)
    ordered = expm(0.5 * t * ad @ ad) @ _power_diag(c, -n - 0.5) @ expm(-0.5 * t * a @ a)
    return float(np.max(np.abs(direct - ordered)[: block + 1, : block + 1]))


def _two_mode_ops(cutoff):
    a, ad = destroy(cutoff), create(cutoff)
    eye = np.eye(cutoff + 1)
    return np.kron(a, eye), np.kron(ad, eye), np.kron(eye, a), np.kron(eye, ad)


def _low_block_mask(cutoff, block):
    n = np.arange(cutoff + 1)
    tot = (n[:, None] + n[None, :]).ravel()
    return tot <= block


def two_mode_reorder_residual(g: float, cutoff: int = 20, block: int | None = None,
                              embed: int | None = None) -> float:
    """Max difference between basis states of total photon number ``<= block``."""
    _check_cutoff(cutoff)
    block = cutoff // 2 if block is None else block
    embed = cutoff + 60 if embed is None else max(embed, cutoff)
    a, ad, c_, cd = _two_mode_ops(cutoff)
    t, ch = math.tanh(g), math.cosh(g)
    n = np.arange(cutoff + 1)
    tot = (n[:, None] + n[None, :]).ravel()
    mask = _low_block_mask(cutoff, block)
    cols = np.flatnonzero(mask)

    def gen(k):
        b = sp.csr_matrix(destroy(k))
        eye = sp.identity(k + 1, format="csr")
        x, y = sp.kron(b, eye), sp.kron(eye, b)
        return g * (x.T @ y.T - x @ y)

    direct = np.zeros(((cutoff + 1) ** 2,) * 2)
    direct[:, cols] = _direct_columns(gen, cutoff, embed, 2, cols)
    ordered = expm(t * ad @ cd) @ _power_diag(ch, -(tot + 1.0)) @ expm(-t * a @ c_)
    return float(np.max(np.abs(direct - ordered)[np.ix_(mask, mask)]))


def beam_splitter_reorder_residual(gamma: float, cutoff: int = 20, block: int | None = None) -> float:
    """Same check for the lossless beam splitter mixing ``a`` with an environment mode ``e``."""
    _check_cutoff(cutoff)
    if abs(math.cos(gamma)) < 1e-12:
        raise InvalidArgument("ordered form needs cos(gamma) != 0")
    block = cutoff // 2 if block is None else block
    a, ad, e, ed = _two_mode_ops(cutoff)
    t, cg = math.tan(gamma), math.cos(gamma)
    n = np.arange(cutoff + 1)
    diff = (n[:, None] - n[None, :]).ravel()
    direct = expm(gamma * (ad @ e - a @ ed))
    ordered = expm(-t * a @ ed) @ _power_diag(cg, diff.astype(float)) @ expm(t * ad @ e)
    mask = _low_block_mask(cutoff, block)
    return float(np.max(np.abs(direct - ordered)[np.ix_(mask, mask)]))


def beam_splitter_kraus_residual(eta: float, cutoff: int = 20) -> float:
    """Max difference between ``<i|_e U |0>_e`` and ``(-1)^i tan^i / sqrt(i!) a^i cos^{n}``.

    The phase ``(-1)^i`` is a convention of the splitter; it cancels in the
    channel ``sum_i K_i rho K_i^+``.
    """
    _check_cutoff(cutoff)
    if not 0.0 < eta <= 1.0:
        raise InvalidArgument(f"eta must lie in (0, 1], got {eta!r}")
    gamma = math.acos(math.sqrt(eta))
    a, ad, e, ed = _two_mode_ops(cutoff)
    u = expm(gamma * (ad @ e - a @ ed))
    d = cutoff + 1
    u4 = u.reshape(d, d, d, d)  # [a_out, e_out, a_in, e_in]
    a1 = destroy(cutoff)
    n = np.arange(d)
    t = math.tan(gamma)
    worst = 0.0
    for i in range(d):
        kraus = (-t) ** i / math.sqrt(math.factorial(i)) * np.linalg.matrix_power(a1, i) @ np.diag(math.cos(gamma) ** n)
        block = u4[:, i, :, 0]
        # a_in + e_in conserved: rows with a_out + i > cutoff are truncated away
        worst = max(worst, float(np.max(np.abs(block - kraus)[: d - i, :])))
    return worst


def characteristic_function_residual(eta: float, z: float, populations) -> float:
    """``|tr rho L^+(z^n) - tr rho (eta z + 1 - eta)^n|`` for a Fock-diagonal ``rho``.

    The left side pushes ``z^{a+a}`` through the loss channel with explicit
    Kraus matrices.
    """
    from .channels import loss_kraus

    p = np.asarray(populations, dtype=float)
    cutoff = len(p) - 1
    zn = np.diag(float(z) ** np.arange(cutoff + 1))
    heis = sum(k.conj().T @ zn @ k for k in loss_kraus(eta, cutoff))
    lhs = float(np.real(np.sum(p * np.diag(heis))))
    rhs = float(np.sum(p * (eta * z + 1 - eta) ** np.arange(cutoff + 1)))
    return abs(lhs - rhs)
