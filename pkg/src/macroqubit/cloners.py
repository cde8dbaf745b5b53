r"""Closed-form generating functions of the three cloners.

For every cloner the full chain "cloner, then loss ``eta`` on both output
modes" is pulled back onto the input space spanned by ``|+> = |1,0>``,
``|-> = |0,1>`` and the vacuum ``|0> = |0,0>`` of the mode pair
``(a, a_perp)``.  What comes back is a function of two counting variables:

``Pi_kl(z, z_perp) = sum_{n,m} z^n z_perp^m <n, m| E(|l><k|) |n, m>``

so that coefficients are joint photon-number probabilities after loss.
All off-diagonal entries vanish for the three cloners considered, which
leaves the diagonal triple ``(pp, mm, oo)`` carried by :class:`RestrictedGen`.

Each entry is stored as a *builder*, a function of two series arguments,
rather than only as a fixed bivariate jet.  Substituting ``z = 1`` yields the
marginals needed by the analyzer; substituting ``z = 1 + t`` yields moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import comb, ive

from .errors import InvalidArgument
from .series import BiSeries, Series, UniSeries, pi_eta

__all__ = [
    "KINDS",
    "ClonerSpec",
    "RestrictedGen",
    "gen_universal",
    "gen_phase_covariant",
    "gen_measure_prepare",
    "restricted_gen",
    "photon_numbers",
    "mean_total_photons",
    "fidelity",
    "gain_for_mean_photons",
]

KINDS = ("universal", "phase-covariant", "measure-prepare")
_ALIASES = {
    "universal": "universal",
    "phase-covariant": "phase-covariant",
    "phase_covariant": "phase-covariant",
    "pc": "phase-covariant",
    "measure-prepare": "measure-prepare",
    "measure_prepare": "measure-prepare",
    "mp": "measure-prepare",
}
ENTRIES = ("pp", "mm", "oo")


@dataclass(frozen=True)
class ClonerSpec:
    """Which cloner, and its strength.

    ``g`` is read by the two amplifiers, ``alpha2`` (mean output intensity)
    by measure-&-prepare.  ``lam`` is a damping rate only used by the
    micro-macro witness.
    """

    kind: str
    g: float = 0.0
    alpha2: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise InvalidArgument(f"unknown cloner kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        for name in ("g", "alpha2", "lam"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise InvalidArgument(f"{name} must be finite and >= 0, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def strength(self) -> float:
        """The parameter that matters for this kind (``g`` or ``alpha2``)."""
        return self.alpha2 if self.kind == "measure-prepare" else self.g

    @classmethod
    def with_strength(cls, kind: str, value: float) -> "ClonerSpec":
        kind = _ALIASES.get(str(kind).lower(), kind)
        return cls(kind, alpha2=value) if kind == "measure-prepare" else cls(kind, g=value)


Builder = Callable[[str, Series, Series], Series]


@dataclass(frozen=True)
class RestrictedGen:
    """Diagonal restricted generating functions of one cloner-plus-loss chain.

    Attributes
    ----------
    pp, mm, oo : BiSeries
        Jets of the ``|+>``, ``|->`` and vacuum entries around ``(0, 0)``.
    builder : callable
        ``builder(entry, z, z_perp)`` evaluates an entry on arbitrary series
        arguments of a common type.
    offdiag_zero : bool
        Always ``True`` here; all coherences between the three basis states
        are removed by the chain.
    """

    spec: ClonerSpec
    eta: float
    order: int
    builder: Builder = field(repr=False, compare=False)
    pp: BiSeries = field(init=False, repr=False)
    mm: BiSeries = field(init=False, repr=False)
    oo: BiSeries = field(init=False, repr=False)
    offdiag_zero: bool = True

    def __post_init__(self):
        z = BiSeries.variable(self.order, 0)
        zp = BiSeries.variable(self.order, 1)
        for name in ENTRIES:
            object.__setattr__(self, name, self.builder(name, z, zp))

    def entry(self, name: str) -> BiSeries:
        if name not in ENTRIES:
            raise InvalidArgument(f"entry must be one of {ENTRIES}, got {name!r}")
        return getattr(self, name)

    def substitute(self, name: str, z: Series, zp: Series) -> Series:
        """The entry with ``(z, z_perp)`` replaced by the given series."""
        if name not in ENTRIES:
            raise InvalidArgument(f"entry must be one of {ENTRIES}, got {name!r}")
        return self.builder(name, z, zp)

    def value(self, name: str, z: float, zp: float) -> float:
        """Point value of an entry (each argument must keep the series in its domain)."""
        return self.substitute(name, UniSeries.constant(z, 0), UniSeries.constant(zp, 0)).constant_term

    def moment(self, name: str, axis: int = 0) -> float:
        """Mean detected photon number of one output mode, ``d/dz`` at ``(1, 1)``."""
        t = UniSeries.variable(1) + 1.0
        one = UniSeries.constant(1.0, 1)
        s = self.substitute(name, t, one) if axis == 0 else self.substitute(name, one, t)
        return s.coefficient(1)


def _check_eta(eta):
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgument(f"eta must lie in [0, 1], got {eta!r}")


def _default_order(order):
    if order is None:
        return 9  # threshold 7 plus headroom
    if order < 1:
        raise InvalidArgument(f"series order must be >= 1, got {order}")
    return int(order)


def gen_universal(spec: ClonerSpec, eta: float, order: int | None = None) -> RestrictedGen:
    r"""Universal cloner followed by loss.

    With ``A(x) = C^2 - S^2 pi(x)``::

        pp = pi(z) A(z)^-2 A(zp)^-1,   mm = pp with z <-> zp,   oo = A(z)^-1 A(zp)^-1
    """
    if spec.kind != "universal":
        raise InvalidArgument(f"gen_universal needs a universal spec, got {spec.kind!r}")
    _check_eta(eta)
    c2, s2 = math.cosh(spec.g) ** 2, math.sinh(spec.g) ** 2

    def build(name, z, zp):
        pz, pzp = pi_eta(eta, z), pi_eta(eta, zp)
        az = (pz * (-s2) + c2).pow(-1.0)
        azp = (pzp * (-s2) + c2).pow(-1.0)
        if name == "pp":
            return pz * az * az * azp
        if name == "mm":
            return pzp * azp * azp * az
        return az * azp

    return RestrictedGen(spec, eta, _default_order(order), build)


def gen_phase_covariant(spec: ClonerSpec, eta: float, order: int | None = None) -> RestrictedGen:
    r"""Phase-covariant cloner (equatorial basis) followed by loss.

    With ``B(x) = C^2 - S^2 pi(x)^2``::

        pp = pi(z) B(z)^-3/2 B(zp)^-1/2,   oo = B(z)^-1/2 B(zp)^-1/2
    """
    if spec.kind != "phase-covariant":
        raise InvalidArgument(f"gen_phase_covariant needs a phase-covariant spec, got {spec.kind!r}")
    _check_eta(eta)
    c2, s2 = math.cosh(spec.g) ** 2, math.sinh(spec.g) ** 2

    def build(name, z, zp):
        pz, pzp = pi_eta(eta, z), pi_eta(eta, zp)
        bz = (pz * pz) * (-s2) + c2
        bzp = (pzp * pzp) * (-s2) + c2
        hz, hzp = bz.pow(-0.5), bzp.pow(-0.5)
        if name == "pp":
            return pz * hz * hz * hz * hzp
        if name == "mm":
            return pzp * hzp * hzp * hzp * hz
        return hz * hzp

    return RestrictedGen(spec, eta, _default_order(order), build)


def _bessel_taylor(n: int, u0: float, kmax: int) -> list:
    r"""``e^{-|u0|} I_n^{(k)}(u0) / k!`` for ``k = 0..kmax``.

    Uses ``I_n^{(k)} = 2^{-k} sum_m C(k, m) I_{n-k+2m}``; all terms of the sum
    share one sign, so there is no cancellation.
    """
    out = []
    for k in range(kmax + 1):
        m = np.arange(k + 1)
        orders = np.abs(n - k + 2 * m)
        s = float(np.sum(comb(k, m) * ive(orders, u0)))
        out.append(s / (2.0**k * math.factorial(k)))
    return out


def gen_measure_prepare(spec: ClonerSpec, eta: float, order: int | None = None) -> RestrictedGen:
    r"""Measure-&-prepare cloner with coherent re-preparation, then loss.

    With ``A = alpha2 (pi(z) - 1)``, ``B = alpha2 (pi(zp) - 1)`` and
    ``u = (A - B)/2``::

        pp = e^{(A+B)/2} (I0(u) + I1(u)),   mm = e^{(A+B)/2} (I0(u) - I1(u)),   oo = 1

    The vacuum entry is 1: nothing is measured, nothing is prepared.
    """
    if spec.kind != "measure-prepare":
        raise InvalidArgument(f"gen_measure_prepare needs a measure-prepare spec, got {spec.kind!r}")
    _check_eta(eta)
    x = spec.alpha2

    def build(name, z, zp):
        if name == "oo":
            return type(z).constant(1.0, z.order)
        a = (pi_eta(eta, z) - 1.0) * x
        b = (pi_eta(eta, zp) - 1.0) * x
        u = (a - b) * 0.5
        u0 = u.constant_term
        kmax = u.ndim * u.order
        sgn = 1.0 if name == "pp" else -1.0
        i0 = _bessel_taylor(0, u0, kmax)
        i1 = _bessel_taylor(1, u0, kmax)
        bessel = u.compose([p + sgn * q for p, q in zip(i0, i1)])
        # e^{|u0|} moved into the exponential keeps every factor bounded
        return ((a + b) * 0.5 + abs(u0)).exp() * bessel

    return RestrictedGen(spec, eta, _default_order(order), build)


def restricted_gen(spec: ClonerSpec, eta: float, order: int | None = None) -> RestrictedGen:
    """Dispatch on ``spec.kind``."""
    return {
        "universal": gen_universal,
        "phase-covariant": gen_phase_covariant,
        "measure-prepare": gen_measure_prepare,
    }[spec.kind](spec, eta, order)


def photon_numbers(spec: ClonerSpec) -> tuple:
    """``(n1, n0)``: mean photons in the input polarization and in the orthogonal one.

    For a single-photon input: ``1 + 2 S^2, S^2`` (universal),
    ``1 + 3 S^2, S^2`` (phase covariant), ``3/4 alpha2, 1/4 alpha2``
    (measure-&-prepare).
    """
    if spec.kind == "measure-prepare":
        return 0.75 * spec.alpha2, 0.25 * spec.alpha2
    s2 = math.sinh(spec.g) ** 2
    return (1.0 + (2.0 if spec.kind == "universal" else 3.0) * s2), s2


def mean_total_photons(spec: ClonerSpec) -> float:
    """Mean photon number on the amplified side for a single-photon input, before loss."""
    n1, n0 = photon_numbers(spec)
    return n1 + n0


def fidelity(spec: ClonerSpec) -> float:
    """``n1 / (n1 + n0)``; undefined (``nan``) when no photons come out."""
    n1, n0 = photon_numbers(spec)
    tot = n1 + n0
    return n1 / tot if tot > 0 else float("nan")


def gain_for_mean_photons(kind: str, mean_na: float) -> float:
    """Strength (``g`` or ``alpha2``) giving a target ``mean_total_photons`` (Brent root finding)."""
    from scipy.optimize import brentq

    kind = ClonerSpec(kind).kind
    if kind == "measure-prepare":
        if mean_na < 0:
            raise InvalidArgument("mean photon number must be >= 0")
        return float(mean_na)
    if mean_na < 1:
        raise InvalidArgument("an amplifier never outputs fewer photons than its single-photon input")
    if mean_na == 1:
        return 0.0

    def f(g):
        return mean_total_photons(ClonerSpec(kind, g=g)) - mean_na

    hi = 1.0
    while f(hi) < 0:
        hi *= 2
    return float(brentq(f, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))
