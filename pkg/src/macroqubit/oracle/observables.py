"""Expectation values and the collective-spin witness on oracle states."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ContractViolation, InvalidArgument
from .master import damped_block_model, propagate_pairs
from .operators import ModeOperators, destroy, number
from .state import TruncatedState

__all__ = ["expect", "witness_from_state", "witness_oracle", "single_mode_damped_channel", "auto_cutoff"]

IMAG_TOL = 1e-10


def expect(state: TruncatedState, operator) -> float:
    """``tr(rho O)`` for a Hermitian observable.

    ``operator`` is a (sparse or dense) matrix on the full space, or a
    callable receiving a :class:`ModeOperators` for the state and returning
    one, e.g. ``lambda ops: ops.n("a") @ ops.n("b")``.

    Raises
    ------
    ContractViolation
        If the imaginary part exceeds ``1e-10`` (the operator was not Hermitian).
    """
    if callable(operator):
        operator = operator(ModeOperators.for_state(state))
    if operator.shape != state.matrix.shape:
        raise InvalidArgument(f"operator shape {operator.shape} does not match state {state.matrix.shape}")
    # tr(rho O) = sum_ij rho_ij O_ji
    val = complex((operator.T.multiply(state.matrix)).sum()) if hasattr(operator, "multiply") \
        else complex(np.sum(state.matrix * np.asarray(operator).T))
    if abs(val.imag) > IMAG_TOL:
        raise ContractViolation(f"expectation has imaginary part {val.imag:.3g}; operator not Hermitian")
    return val.real


def witness_from_state(state: TruncatedState, a_modes=("a", "a_perp"), b_modes=("b", "b_perp")):
    r"""``(W, <N_A>)`` with ``W = |<J_A . J_B>| - <N_A N_B>``."""
    ops = ModeOperators.for_state(state)
    ja = ops.stokes(*a_modes)
    jb = ops.stokes(*b_modes)
    corr = sum(expect(state, x @ y) for x, y in zip(ja, jb))
    na = ops.n(a_modes[0]) + ops.n(a_modes[1])
    nb = ops.n(b_modes[0]) + ops.n(b_modes[1])
    w = abs(corr) - expect(state, na @ nb)
    return w, expect(state, na)


def single_mode_damped_channel(kind: str, chi: float, lam: float, cutoff: int,
                               anticlone_cutoff: int | None = None, damp_anticlones: bool = True,
                               steps=None) -> dict:
    """Images ``E(|m><n|)`` for ``m, n`` in ``{0, 1}`` of one clone mode.

    The anticlone (universal case) starts in vacuum and is traced out.
    Returns ``{(m, n): (cutoff+1, cutoff+1) matrix}``.
    """
    if kind == "universal":
        ac = cutoff if anticlone_cutoff is None else anticlone_cutoff
        model = damped_block_model(kind, chi, lam, (cutoff, ac), damp_anticlones=damp_anticlones)
        traced = (1,)
        codes = {(m, n): (m * (ac + 1)) * model.dim + n * (ac + 1) for m in (0, 1) for n in (0, 1)}
    elif kind == "phase-covariant":
        model = damped_block_model(kind, chi, lam, (cutoff,))
        traced = ()
        codes = {(m, n): m * model.dim + n for m in (0, 1) for n in (0, 1)}
    else:
        raise InvalidArgument(f"unknown kind {kind!r}")
    keys = list(codes)
    red = propagate_pairs(model, [codes[k] for k in keys], 1.0, traced, steps)
    return {k: red[:, :, i] for i, k in enumerate(keys)}


def auto_cutoff(kind: str, chi: float, tail: float = 1e-9, floor: int = 12) -> int:
    """Cutoff at which the undamped output's Fock tail falls below ``tail``.

    Populations decay like ``tanh(chi)^(2n)`` (universal) or
    ``tanh(chi)^n`` (phase covariant, pairs of photons); damping only helps.
    """
    t2 = math.tanh(chi) ** 2
    if t2 == 0:
        return floor
    per = 1.0 if kind == "universal" else 2.0
    return max(floor, int(math.ceil(per * math.log(tail) / math.log(t2))) + 10)


def witness_oracle(kind: str, chi: float, lam: float, cutoff: int | None = None, anticlone_cutoff=None,
                   damp_anticlones: bool = True, tail_tol: float = 1e-8, steps=None):
    r"""Witness ``(W, N)`` after damped amplification of half a singlet.

    Brute force on the Fock space, exploiting only that the two polarization
    modes evolve independently: the singlet is expanded in
    ``|x_k><x_l|_a (x) |y_k><y_l|_{a_perp} (x) |B_k><B_l|`` and each factor is
    propagated by the master equation on its own mode (plus anticlone).
    """
    from ..errors import TruncationError

    if cutoff is None:
        cutoff = auto_cutoff(kind, chi)
    imgs = single_mode_damped_channel(kind, chi, lam, cutoff, anticlone_cutoff, damp_anticlones, steps)
    # the a_perp channel is the same map: for the universal cloner its
    # Hamiltonian differs by a sign that cancels in the reduced dynamics
    top = max(abs(imgs[(1, 1)][-1, -1]), abs(imgs[(0, 0)][-1, -1]))
    if top > tail_tol:
        raise TruncationError(f"clone mode reaches cutoff {cutoff} (population {top:.3g})",
                              mode="a", tail=top)
    a = destroy(cutoff)
    ad = a.T
    nn = number(cutoff)

    def tr(op, x):
        return complex(np.trace(op @ x))

    # singlet terms: k=0 -> a in |1>, a_perp in |0>, b_perp excited (sign +)
    #                k=1 -> a in |0>, a_perp in |1>, b excited (sign -)
    x = {0: 1, 1: 0}
    y = {0: 0, 1: 1}
    sign = {0: 1.0, 1: -1.0}
    bket = {0: (0, 1), 1: (1, 0)}
    bo = ModeOperators(("b", "b_perp"), (1, 1))
    jb = [m.toarray() for m in bo.stokes("b", "b_perp")]

    def bvec(k):
        v = np.zeros(4)
        v[bket[k][0] * 2 + bket[k][1]] = 1.0
        return v

    corr = 0.0 + 0.0j
    na = 0.0
    for k in (0, 1):
        for l in (0, 1):
            coef = 0.5 * sign[k] * sign[l]
            X = imgs[(x[k], x[l])]
            Y = imgs[(y[k], y[l])]
            # tr(J_B^i |B_k><B_l|) = <B_l| J_B^i |B_k>
            jbx, jby, jbz = (bvec(l) @ m @ bvec(k) for m in jb)
            jax = tr(ad, X) * tr(a, Y) + tr(a, X) * tr(ad, Y)
            jay = -1j * (tr(ad, X) * tr(a, Y) - tr(a, X) * tr(ad, Y))
            jaz = tr(nn, X) * tr(np.eye(cutoff + 1), Y) - tr(np.eye(cutoff + 1), X) * tr(nn, Y)
            corr += coef * (jax * jbx + jay * jby + jaz * jbz)
            if k == l:
                na += coef * (tr(nn, X) * np.trace(Y) + np.trace(X) * tr(nn, Y)).real
    if abs(corr.imag) > IMAG_TOL:
        raise ContractViolation(f"correlator has imaginary part {corr.imag:.3g}")
    # N_B = 1 exactly on the singlet, so <N_A N_B> = <N_A>
    return abs(corr.real) - na, na
