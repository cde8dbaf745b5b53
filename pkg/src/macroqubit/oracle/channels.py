r"""Loss, amplification and measure-&-prepare channels on truncated states.

All channels act mode by mode through Kraus operators (or a unitary) built
directly on the Fock basis.  Nothing here uses the generating-function
calculus of :mod:`macroqubit.cloners`; that independence is the point.

Every state-level channel checks truncation afterwards and raises
:class:`~macroqubit.errors.TruncationError` instead of silently dropping
population that left the cutoff.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

from ..errors import InvalidArgument, TruncationError
from .operators import create, destroy
from .state import TAIL_TOL, TruncatedState

__all__ = [
    "loss_kraus",
    "universal_kraus",
    "universal_kraus_dilation",
    "squeeze_unitary",
    "apply_single_mode_kraus",
    "apply_loss",
    "apply_universal_cloner",
    "apply_phase_covariant_cloner",
    "apply_mp_cloner",
    "coherent_ket",
    "mp_quadrature_points",
]


# --------------------------------------------------------------------------
# single-mode Kraus families


def loss_kraus(eta: float, cutoff: int) -> list:
    r"""Kraus terms of the pure-loss channel with transmission ``eta``.

    ``<n-i|K_i|n> = sqrt(C(n,i)) eta^{(n-i)/2} (1-eta)^{i/2}``, which is the
    ``tan^i(g)/sqrt(i!) a^i cos(g)^{a^+a}`` family written so that the
    endpoints ``eta = 0`` and ``eta = 1`` need no special casing.
    """
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgument(f"eta must lie in [0, 1], got {eta!r}")
    d = cutoff + 1
    out = []
    for i in range(d):
        k = np.zeros((d, d))
        for n in range(i, d):
            k[n - i, n] = math.sqrt(math.comb(n, i)) * eta ** ((n - i) / 2) * (1 - eta) ** (i / 2)
        out.append(k)
    return out


def universal_kraus(g: float, cutoff_in: int, cutoff_out: int | None = None) -> list:
    r"""Kraus terms ``T^i/sqrt(i!) a^{+i} C^{-(a^+a+1)}`` of the universal cloner.

    Term ``i`` (``i`` anticlone photons) maps ``|n>`` to ``|n+i>`` with
    amplitude ``tanh(g)^i sqrt(C(n+i, i)) / cosh(g)^(n+1)``.
    """
    if g < 0:
        raise InvalidArgument(f"gain must be >= 0, got {g!r}")
    cutoff_out = cutoff_in if cutoff_out is None else cutoff_out
    t, c = math.tanh(g), math.cosh(g)
    out = []
    n = np.arange(cutoff_in + 1)
    for i in range(cutoff_out + 1):
        if i > 0 and t == 0.0:
            break
        k = np.zeros((cutoff_out + 1, cutoff_in + 1))
        ok = n + i <= cutoff_out
        nn = n[ok]
        logamp = 0.5 * (gammaln(nn + i + 1) - gammaln(nn + 1) - gammaln(i + 1)) - (nn + 1) * math.log(c)
        amp = np.exp(logamp) * (t**i)
        k[nn + i, nn] = amp
        out.append(k)
    return out


def universal_kraus_dilation(g: float, cutoff_in: int, cutoff_out: int, margin: int = 30) -> list:
    """Same Kraus family computed by brute force from the two-mode unitary.

    ``<m, i| exp(g (a^+ c^+ - a c)) |n, 0>`` with both modes on an enlarged
    working space; used to cross-check :func:`universal_kraus`.
    """
    w = max(cutoff_in, cutoff_out) + margin
    a = sp.csr_matrix(destroy(w))
    eye = sp.identity(w + 1, format="csr")
    ac = sp.kron(a, a, format="csc")
    gen = g * (ac.T - ac)
    cols = [np.ravel_multi_index((n, 0), (w + 1, w + 1)) for n in range(cutoff_in + 1)]
    start = np.zeros(((w + 1) ** 2, len(cols)))
    start[cols, range(len(cols))] = 1.0
    evolved = expm_multiply(gen, start).reshape(w + 1, w + 1, len(cols))
    del eye
    return [evolved[: cutoff_out + 1, i, :].copy() for i in range(cutoff_out + 1)]


def squeeze_unitary(g: float, cutoff_in: int, cutoff_out: int | None = None, margin: int | None = None) -> np.ndarray:
    r"""``exp(g/2 (a^{+2} - a^2))`` by dense matrix exponential, then cropped.

    The exponential is taken on an enlarged space so the kept block is not
    polluted by reflections off the working cutoff.
    """
    if g < 0:
        raise InvalidArgument(f"gain must be >= 0, got {g!r}")
    cutoff_out = cutoff_in if cutoff_out is None else cutoff_out
    big = max(cutoff_in, cutoff_out)
    w = big + (margin if margin is not None else max(40, big))
    a = destroy(w)
    gen = 0.5 * g * (a.T @ a.T - a @ a)
    u = la.expm(gen)
    return u[: cutoff_out + 1, : cutoff_in + 1].copy()


# --------------------------------------------------------------------------
# tensor plumbing


def apply_single_mode_kraus(tensor: np.ndarray, axis: int, kraus) -> np.ndarray:
    """``sum_i K_i rho K_i^+`` on one mode of a ``dims + dims`` tensor.

    Works for any operator in place of ``rho`` (non-Hermitian inputs are
    allowed; the restriction oracle needs them).
    """
    n = tensor.ndim // 2
    out = None
    for k in kraus:
        t = np.moveaxis(np.tensordot(k, tensor, axes=([1], [axis])), 0, axis)
        t = np.moveaxis(np.tensordot(t, k.conj(), axes=([n + axis], [1])), -1, n + axis)
        out = t if out is None else out + t
    return out


def _check_tail(state: TruncatedState, modes, tol: float, expected_trace: float = 1.0, before=None) -> None:
    """Flag population pushed to the top level (beyond what was already there) or lost."""
    deficit = expected_trace - state.trace()
    before = before or {}
    for m in modes:
        tail = state.tail_mass(m)
        if tail - before.get(m, 0.0) > tol or deficit > tol:
            raise TruncationError(
                f"cutoff {state.cutoffs[state.index(m)]} too small for mode {m!r}: "
                f"top-level population {tail:.3g}, lost trace {deficit:.3g}",
                mode=m,
                tail=max(tail, deficit),
            )


def _apply_per_mode(state, modes, kraus_for, cutoff, tail_tol, check=True):
    if isinstance(modes, str):
        modes = (modes,)
    trace_in = state.trace()
    t = state.tensor()
    cutoffs = list(state.cutoffs)
    before = {}
    for m in modes:
        k = state.index(m)
        new_cut = cutoffs[k] if cutoff is None else int(cutoff)
        if new_cut <= cutoffs[k]:
            before[m] = float(state.populations(m)[new_cut])
        kraus = kraus_for(cutoffs[k], new_cut)
        t = apply_single_mode_kraus(t, k, kraus)
        cutoffs[k] = new_cut
    out = TruncatedState.from_tensor(state.modes, cutoffs, t)
    if check:
        _check_tail(out, modes, tail_tol, trace_in, before)
    return out


# --------------------------------------------------------------------------
# state-level channels


def apply_loss(state: TruncatedState, modes, eta: float) -> TruncatedState:
    """Isotropic pure loss with transmission ``eta`` on each listed mode."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgument(f"eta must lie in [0, 1], got {eta!r}")

    def family(cin, cout):
        return loss_kraus(eta, cin)

    # loss never raises the photon number, so it cannot overflow
    return _apply_per_mode(state, modes, family, None, np.inf)


def apply_universal_cloner(state, modes, g: float, cutoff: int | None = None, tail_tol: float = TAIL_TOL):
    """Universal (phase-insensitive) amplification of each listed mode.

    ``cutoff`` optionally enlarges the listed modes first; the anticlone
    modes are traced out implicitly by the Kraus sum.
    """
    if g < 0:
        raise InvalidArgument(f"gain must be >= 0, got {g!r}")
    return _apply_per_mode(state, modes, lambda ci, co: universal_kraus(g, ci, co), cutoff, tail_tol)


def apply_phase_covariant_cloner(state, modes, g: float, cutoff: int | None = None, tail_tol: float = TAIL_TOL):
    """Single-mode squeezing ``exp(g/2 (a^{+2} - a^2))`` on each listed mode.

    With both modes of an equatorial polarization basis listed this is the
    phase-covariant cloner.
    """
    if g < 0:
        raise InvalidArgument(f"gain must be >= 0, got {g!r}")
    return _apply_per_mode(state, modes, lambda ci, co: [squeeze_unitary(g, ci, co)], cutoff, tail_tol)


def coherent_ket(amplitude: float, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    if amplitude == 0:
        out = np.zeros(cutoff + 1)
        out[0] = 1.0
        return out
    logs = -0.5 * amplitude**2 + n * math.log(abs(amplitude)) - 0.5 * gammaln(n + 1)
    return np.exp(logs) * np.sign(amplitude) ** n


def mp_quadrature_points(cutoff: int, points: int | None = None) -> int:
    """Trapezoid size for the measure-&-prepare angle integral.

    Matrix elements are trigonometric polynomials of degree at most
    ``4*cutoff + 2``, so ``4*cutoff + 4`` uniform points integrate them
    exactly; never fewer than 64.
    """
    if points is not None:
        if points < 1:
            raise InvalidArgument("need at least one quadrature point")
        return int(points)
    return max(64, 4 * cutoff + 4)


def _mp_output_blocks(alpha2: float, cutoff: int, points: int):
    """Return ``{(k, l): M_kl}`` with ``M_kl = 2/P sum_phi f_kl(phi) |b_phi><b_phi|``.

    ``f_{++} = cos^2, f_{+-} = f_{-+} = cos sin, f_{--} = sin^2`` and
    ``|b_phi> = |alpha cos phi>|alpha sin phi>``.
    """
    alpha = math.sqrt(alpha2)
    d = cutoff + 1
    phis = 2 * np.pi * np.arange(points) / points
    blocks = {key: np.zeros((d * d, d * d)) for key in ("pp", "pm", "mm")}
    for phi in phis:
        c, s = math.cos(phi), math.sin(phi)
        b = np.kron(coherent_ket(alpha * c, cutoff), coherent_ket(alpha * s, cutoff))
        outer = np.outer(b, b)
        blocks["pp"] += c * c * outer
        blocks["pm"] += c * s * outer
        blocks["mm"] += s * s * outer
    for key in blocks:
        blocks[key] *= 2.0 / points
    return blocks


def apply_mp_cloner(
    state: TruncatedState,
    modes,
    alpha2: float,
    cutoff: int | None = None,
    points: int | None = None,
    tail_tol: float = TAIL_TOL,
    input_tol: float = 1e-12,
) -> TruncatedState:
    r"""Measure in a random real basis of ``modes``, re-prepare coherent light.

    The single-photon sector of the two listed modes is projected on
    ``|1_phi> = cos(phi)|1,0> + sin(phi)|0,1>`` and replaced by
    ``|alpha cos phi>|alpha sin phi>``, integrated over ``phi`` with weight
    ``2 dphi / 2pi``.  The vacuum sector is passed through unchanged (no
    click, nothing prepared).  The output cutoff of both modes is ``cutoff``.
    """
    if alpha2 < 0:
        raise InvalidArgument(f"alpha2 must be >= 0, got {alpha2!r}")
    if len(modes) != 2:
        raise InvalidArgument("the measure-&-prepare cloner acts on a mode pair")
    cutoff = state.cutoff if cutoff is None else int(cutoff)
    points = mp_quadrature_points(cutoff, points)
    ia, ib = state.index(modes[0]), state.index(modes[1])
    rest = [i for i in range(len(state.modes)) if i not in (ia, ib)]
    order = [ia, ib] + rest
    st = state.reorder([state.modes[i] for i in order])
    t = st.tensor()
    n = len(order)
    pops = np.real(np.diagonal(st.matrix)).reshape(st.dims)
    beyond = pops.sum() - pops[0, 0].sum() - pops[1, 0].sum() - pops[0, 1].sum()
    if beyond > input_tol:
        raise InvalidArgument(f"input carries {beyond:.3g} population outside the qubit+vacuum sector")

    def block(k, l):
        idx = (k[0], k[1]) + (slice(None),) * (n - 2) + (l[0], l[1]) + (slice(None),) * (n - 2)
        return t[idx]

    plus, minus, vac = (1, 0), (0, 1), (0, 0)
    rest_dims = st.dims[2:]
    rest_dim = int(np.prod(rest_dims)) if rest else 1
    r_pp = block(plus, plus).reshape(rest_dim, rest_dim)
    r_pm = block(plus, minus).reshape(rest_dim, rest_dim)
    r_mp = block(minus, plus).reshape(rest_dim, rest_dim)
    r_mm = block(minus, minus).reshape(rest_dim, rest_dim)
    r_00 = block(vac, vac).reshape(rest_dim, rest_dim)

    blocks = _mp_output_blocks(alpha2, cutoff, points)
    d = cutoff + 1
    vac_proj = np.zeros((d * d, d * d))
    vac_proj[0, 0] = 1.0
    out = (
        np.kron(blocks["pp"], r_pp)
        + np.kron(blocks["pm"], r_pm + r_mp)
        + np.kron(blocks["mm"], r_mm)
        + np.kron(vac_proj, r_00)
    )
    cutoffs = (cutoff, cutoff) + tuple(st.cutoffs[2:])
    result = TruncatedState(st.modes, cutoffs, out).reorder(state.modes)
    _check_tail(result, modes, tail_tol, state.trace())
    return result
