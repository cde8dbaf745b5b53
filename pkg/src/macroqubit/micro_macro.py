r"""Micro-macro entanglement witness under damping and under loss.

The witness is ``W = |<J_A . J_B>| - <N_A N_B>`` with ``J`` the Stokes
vectors of the amplified side (A) and of the untouched photon (B), so that
``W > 0`` certifies entanglement.  For the singlet the B side carries exactly
one photon, and ``W`` and the clone photon number ``N`` reduce to a handful
of Heisenberg-picture moments of a single amplified mode.

With the amplifier Hamiltonian and photon damping at rate ``lambda`` on the
amplified modes, and after rescaling time to 1, these moments are
elementary functions of ``chi`` and ``lambda`` built from

    phi1(x) = (e^x - 1) / x,

which stays smooth through ``2 chi = lambda``.

``N`` is always the total clone photon number summed over both
polarizations.  The ``*_printed`` variants reproduce the expressions as
they are usually quoted; the phase-covariant pair differs from the direct
calculation by constant factors and is kept only for comparison.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .cloners import ClonerSpec
from .errors import InvalidArgument, NumericError

__all__ = [
    "WitnessPoint",
    "phi1",
    "witness_phase_covariant",
    "witness_universal",
    "witness_phase_covariant_printed",
    "witness_universal_printed",
    "witness",
    "witness_loss_before",
    "loss_before_threshold",
    "trace_threshold_curve",
]

# below this |x| phi1 uses its Taylor polynomial
_SERIES_RADIUS = 1e-4
CHI_BRACKET = (1e-6, 30.0)
CHI_MAX = 300.0
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class WitnessPoint:
    chi: float
    lam: float
    W: float
    N: float


def phi1(x: float) -> float:
    """``(e^x - 1)/x`` with the removable point at 0 handled by a 4th-order Taylor polynomial."""
    if abs(x) < _SERIES_RADIUS:
        return 1.0 + x * (1 / 2 + x * (1 / 6 + x * (1 / 24 + x / 120)))
    return math.expm1(x) / x


def _check(chi, lam):
    if not (chi >= 0 and lam >= 0) or math.isinf(chi) or math.isinf(lam):
        raise InvalidArgument(f"chi and lambda must be finite and >= 0, got chi={chi!r}, lambda={lam!r}")


def witness_phase_covariant(chi: float, lam: float) -> WitnessPoint:
    r"""``(W, N)`` for the phase-covariant amplifier with clone damping.

    With ``K = lambda (phi1(2chi - lambda) + phi1(-2chi - lambda))``::

        W = 1 + e^{-lambda} - K/2
        N = 2 e^{-lambda} cosh(2chi) + K/2 - 1

    At ``lambda = 0`` this is ``W = 2`` and ``N = 2 cosh(2chi) - 1``, the
    ``1 + 4 sinh^2 chi`` photons of a squeezed single photon plus squeezed
    vacuum.
    """
    _check(chi, lam)
    k = lam * (phi1(2 * chi - lam) + phi1(-2 * chi - lam))
    decay = math.exp(-lam)
    w = 1.0 + decay - 0.5 * k
    n = 2.0 * decay * math.cosh(2 * chi) + 0.5 * k - 1.0
    return WitnessPoint(chi, lam, w, n)


def witness_universal(chi: float, lam: float) -> WitnessPoint:
    r"""``(W, N)`` for the universal amplifier, clones and anticlones damped alike.

    ``W = 2G - 2Q`` and ``N = G + 2Q`` with::

        G = e^{-lambda} (cosh(2chi) + 1) / 2
        Q = chi (phi1(2chi - lambda) - phi1(-2chi - lambda)) / 2
    """
    _check(chi, lam)
    if lam == 0:
        # unitary case: 2G - 2Q = 2 exactly, which rounding of G - Q would spoil at large chi
        return WitnessPoint(chi, lam, 2.0, 0.5 * (3.0 * math.cosh(2 * chi) - 1.0))
    g = 0.5 * math.exp(-lam) * (math.cosh(2 * chi) + 1.0)
    q = 0.5 * chi * (phi1(2 * chi - lam) - phi1(-2 * chi - lam))
    return WitnessPoint(chi, lam, 2 * g - 2 * q, g + 2 * q)


def witness_phase_covariant_printed(chi: float, lam: float) -> WitnessPoint:
    """Commonly quoted phase-covariant expressions, kept for comparison only.

    They do not reduce to the unitary result at ``lambda = 0`` for ``N``
    and double the damping correction in ``W``.
    """
    _check(chi, lam)
    s, c = math.sinh(2 * chi), math.cosh(2 * chi)
    d = 4 * chi * chi - lam * lam
    if d == 0:
        raise InvalidArgument("printed form is singular at 2 chi = lambda")
    corr = (math.exp(-lam) * (2 * chi * s + lam * c) - lam) / d
    return WitnessPoint(chi, lam, 1 + math.exp(-lam) - 2 * lam * corr, 2 * math.exp(-lam) * c + 2 * lam * corr)


def witness_universal_printed(chi: float, lam: float) -> WitnessPoint:
    """Universal ``G``/``Q`` form with explicit denominators (singular at ``2 chi = lambda``)."""
    _check(chi, lam)
    if 2 * chi == lam:
        raise InvalidArgument("printed form is singular at 2 chi = lambda")
    g = 0.5 * math.exp(-lam) * (math.cosh(2 * chi) + 1)
    q = 0.25 * (2 * chi / (2 * chi - lam) * (math.exp(2 * chi - lam) - 1)
                + 2 * chi / (2 * chi + lam) * (math.exp(-2 * chi - lam) - 1))
    return WitnessPoint(chi, lam, 2 * g - 2 * q, g + 2 * q)


_CLOSED = {"universal": witness_universal, "phase-covariant": witness_phase_covariant}


def witness(kind: str, chi: float, lam: float) -> WitnessPoint:
    kind = ClonerSpec(kind).kind
    if kind not in _CLOSED:
        raise InvalidArgument(f"no damped witness for {kind!r}")
    return _CLOSED[kind](chi, lam)


def witness_loss_before(p: float, n0: float) -> float:
    """``W = 2p - 2(1 - p) n0`` when photon ``a`` survives with probability ``p``
    and the amplified vacuum carries ``n0`` photons."""
    if not 0.0 <= p <= 1.0:
        raise InvalidArgument(f"p must lie in [0, 1], got {p!r}")
    if n0 < 0:
        raise InvalidArgument(f"n0 must be >= 0, got {n0!r}")
    return 2.0 * p - 2.0 * (1.0 - p) * n0


def loss_before_threshold(p: float) -> float:
    """Largest ``n0`` with ``W >= 0``: ``p / (1 - p)`` (infinite at ``p = 1``)."""
    if not 0.0 <= p <= 1.0:
        raise InvalidArgument(f"p must lie in [0, 1], got {p!r}")
    return math.inf if p == 1.0 else p / (1.0 - p)


def _crossing(fn, target, ratio):
    """First ``chi`` where ``W(chi, ratio chi)`` crosses ``target``, or ``None``."""

    def h(chi):
        return fn(chi, ratio * chi).W - target

    lo, hi = CHI_BRACKET
    grid = np.geomspace(lo, hi, 241)
    while True:
        vals = [h(x) for x in grid]
        for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if fa == 0.0:
                return float(a)
            if fa * fb < 0:
                return brentq(h, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        if hi >= CHI_MAX:
            return None
        # nothing yet: widen the bracket
        lo, hi = hi, min(2 * hi, CHI_MAX)
        grid = np.linspace(lo, hi, 121)


def trace_threshold_curve(kind: str, target: float, ratios, workers: int = 1) -> list:
    r"""Clone photon number at which the witness falls to ``target`` along ``lambda = r chi``.

    For each ratio ``r`` the witness ``W(chi, r chi)`` is scanned on a grid
    over ``chi`` in ``[1e-6, 30]`` (widened up to ``300`` if needed) and the
    first sign change of ``W - target`` is refined with Brent's method.

    Returns
    -------
    list of (ratio, N or None)
        ``None`` marks a ratio where ``W`` never reaches ``target``.

    Raises
    ------
    NumericError
        If a root is found but ``|W - target|`` there exceeds ``1e-8``.
    """
    if target not in (0, 1):
        raise InvalidArgument(f"target must be 0 or 1, got {target!r}")
    kind = ClonerSpec(kind).kind
    if kind not in _CLOSED:
        raise InvalidArgument(f"no damped witness for {kind!r}")
    fn = _CLOSED[kind]
    ratios = [float(r) for r in ratios]
    for r in ratios:
        if not r > 0:
            raise InvalidArgument(f"ratios must be > 0, got {r!r}")

    def one(r):
        chi = _crossing(fn, target, r)
        if chi is None:
            return r, None
        pt = fn(chi, r * chi)
        if abs(pt.W - target) > RESIDUAL_TOL:
            raise NumericError(f"threshold residual {abs(pt.W - target):.3g} at ratio {r}")
        return r, pt.N

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, ratios))
    return [one(r) for r in ratios]
