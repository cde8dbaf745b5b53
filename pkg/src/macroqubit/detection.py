r"""Lossy threshold detectors and the two-detector polarization analyzer.

A detector *sees* light when at least ``theta`` photons survive the loss
``eta``.  The analyzer is a polarizing splitter with one such detector per
output; an event is conclusive when exactly one of them sees.

Given a restricted generating function ``f(z, z_perp)`` whose coefficients
are joint photon-number probabilities after loss, the analyzer outcomes are
coefficient extractions::

    P(a_perp does not see)   = [z_perp^{theta-1}] f(1, z_perp) / (1 - z_perp)
    P(neither sees)          = [z^{theta-1} z_perp^{theta-1}] f / ((1 - z)(1 - z_perp))
    p_a = P(a_perp does not see) - P(neither sees)

and symmetrically for ``p_a_perp``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import binom

from .cloners import ENTRIES, RestrictedGen
from .errors import ContractViolation, InvalidArgument
from .series import UniSeries

__all__ = [
    "DetectorSpec",
    "AnalyzerOutcome",
    "EYE",
    "see_probability",
    "analyzer_probs",
    "detector_array_povm",
    "detector_array_no_see",
    "finite_difference_delta",
]

NEGATIVE_TOL = 1e-9


@dataclass(frozen=True)
class DetectorSpec:
    """Efficiency ``eta`` in ``[0, 1]`` and integer threshold ``theta >= 1``."""

    eta: float
    theta: int

    def __post_init__(self):
        eta = float(self.eta)
        if not 0.0 <= eta <= 1.0:
            raise InvalidArgument(f"eta must lie in [0, 1], got {self.eta!r}")
        if int(self.theta) != self.theta or self.theta < 1:
            raise InvalidArgument(f"theta must be an integer >= 1, got {self.theta!r}")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "theta", int(self.theta))

    def after_transmission(self, t: float) -> "DetectorSpec":
        """The same detector behind an extra channel of transmission ``t``."""
        if not 0.0 <= t <= 1.0:
            raise InvalidArgument(f"transmission must lie in [0, 1], got {t!r}")
        return DetectorSpec(self.eta * t, self.theta)


EYE = DetectorSpec(0.07, 7)


@dataclass(frozen=True)
class AnalyzerOutcome:
    p_a: float
    p_aperp: float
    p_null: float

    @property
    def conclusive(self) -> float:
        return self.p_a + self.p_aperp

    def as_tuple(self):
        return self.p_a, self.p_aperp, self.p_null


def see_probability(n: int, det: DetectorSpec) -> float:
    """Probability that ``n`` photons leave at least ``theta`` after binomial loss."""
    if n < 0:
        raise InvalidArgument(f"photon number must be >= 0, got {n}")
    return float(binom.sf(det.theta - 1, n, det.eta))


def _weights(which):
    if isinstance(which, str):
        if which not in ENTRIES:
            raise InvalidArgument(f"entry must be one of {ENTRIES}, got {which!r}")
        return {which: 1.0}
    w = dict(which)
    bad = set(w) - set(ENTRIES)
    if bad:
        raise InvalidArgument(f"unknown restriction entries {sorted(bad)}")
    return w


def analyzer_probs(gen: RestrictedGen, which="pp", det: DetectorSpec | None = None) -> AnalyzerOutcome:
    """Analyzer outcome probabilities for one input basis state (or a mixture).

    Parameters
    ----------
    gen : RestrictedGen
        Generating functions built with the *detector's* efficiency folded
        into the loss (``gen.eta`` must equal ``det.eta``).
    which : str or mapping
        ``"pp"``, ``"mm"``, ``"oo"`` or ``{entry: weight}`` for a diagonal
        mixture of input states.
    det : DetectorSpec
        Only ``theta`` is read here.

    Raises
    ------
    ContractViolation
        If any probability comes out below ``-1e-9``.
    """
    if det is None:
        raise InvalidArgument("a DetectorSpec is required")
    if abs(det.eta - gen.eta) > 1e-15:
        raise InvalidArgument(f"generating function built for eta={gen.eta}, detector has eta={det.eta}")
    th = det.theta
    if gen.order < th - 1:
        raise InvalidArgument(f"series order {gen.order} too small for threshold {th}")
    k = th - 1
    one = UniSeries.constant(1.0, k)
    var = UniSeries.variable(k)
    ns_a = ns_ap = joint = 0.0
    for name, w in _weights(which).items():
        # marginals: the other variable is set to 1
        ns_ap += w * gen.substitute(name, one, var).divide_by_one_minus().coefficient(k)
        ns_a += w * gen.substitute(name, var, one).divide_by_one_minus().coefficient(k)
        f = gen.entry(name)
        if f.order != k:
            from .series import BiSeries

            f = BiSeries(f.coeffs[: k + 1, : k + 1]) if f.order > k else gen.builder(
                name, BiSeries.variable(k, 0), BiSeries.variable(k, 1))
        joint += w * f.divide_by_one_minus(0).divide_by_one_minus(1).coefficient(k, k)
    p_a = ns_ap - joint
    p_ap = ns_a - joint
    p_null = 1.0 - p_a - p_ap
    for label, p in (("p_a", p_a), ("p_aperp", p_ap), ("p_null", p_null)):
        if p < -NEGATIVE_TOL:
            raise ContractViolation(f"{label} = {p:.3g} is negative; generating function is inconsistent")
    return AnalyzerOutcome(p_a, p_ap, p_null)


def _array_element(n_det: int, j: int, n: int) -> Fraction:
    """``<n|P_j|n>``: exactly ``j`` of ``n_det`` equal ideal detectors fire."""
    s = Fraction(0)
    for k in range(j + 1):
        s += math.comb(j, k) * (-1) ** (j - k) * Fraction(k, n_det) ** n
    return math.comb(n_det, j) * s


def detector_array_povm(n_detectors: int, theta: int, cutoff: int) -> dict:
    r"""Fock-diagonal elements of the ``N``-detector array POVM.

    ``n`` photons spread uniformly over ``N`` ideal click detectors;
    ``<n|P_j|n>`` is the probability that exactly ``j`` of them click, by
    inclusion-exclusion.  Returns ``{"P_j": (theta, cutoff+1) array,
    "P_ns": sum over j < theta, "exact": list of Fraction rows}``.
    """
    if n_detectors < 1 or theta < 1:
        raise InvalidArgument("need at least one detector and theta >= 1")
    if n_detectors < theta:
        raise InvalidArgument(f"an array of {n_detectors} detectors cannot reach threshold {theta}")
    exact = [[_array_element(n_detectors, j, n) for n in range(cutoff + 1)] for j in range(theta)]
    pj = np.array([[float(x) for x in row] for row in exact])
    return {"P_j": pj, "P_ns": pj.sum(axis=0), "exact": exact}


def detector_array_no_see(n_detectors: int, theta: int, cutoff: int) -> np.ndarray:
    """``<n|P_ns|n>`` for ``n = 0..cutoff``: fewer than ``theta`` detectors click."""
    return detector_array_povm(n_detectors, theta, cutoff)["P_ns"]


def finite_difference_delta(m: int, j: int) -> Fraction:
    r"""``sum_k (-1)^{j-k} k^m / (k! (j-k)!)``, which equals ``delta_{m j}`` for ``m <= j``."""
    if m < 0 or j < 0:
        raise InvalidArgument("m and j must be non-negative")
    return sum(
        (Fraction((-1) ** (j - k) * k**m, math.factorial(k) * math.factorial(j - k)) for k in range(j + 1)),
        Fraction(0),
    )
