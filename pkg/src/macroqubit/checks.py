"""Self-verification suite: closed forms against the Fock-space oracle and exact identities.

Each check returns a residual that is compared with its tolerance.  The
whole set runs in about ten seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cloners import ClonerSpec, photon_numbers, restricted_gen
from .detection import EYE, DetectorSpec, analyzer_probs, detector_array_no_see, finite_difference_delta
from .micro_macro import witness
from .oracle import identities
from .oracle.channels import apply_mp_cloner, apply_phase_covariant_cloner, apply_universal_cloner
from .oracle.master import master_equation_doped_fiber
from .oracle.observables import expect, witness_oracle
from .oracle.restriction import restricted_povm_oracle
from .oracle.state import fock_state, make_singlet

__all__ = ["Check", "CHECKS", "run_checks"]


@dataclass(frozen=True)
class Check:
    name: str
    tolerance: float
    func: Callable[[], float]
    description: str


def _reorder_squeeze():
    return max(identities.squeeze_reorder_residual(g, 20) for g in (0.2, 0.4, 0.6))


def _reorder_two_mode():
    return max(identities.two_mode_reorder_residual(g, 20) for g in (0.2, 0.4, 0.6))


def _reorder_beam_splitter():
    # the ordered product carries cos(gamma)^(-n) factors that cancel in the
    # end; keep gamma <= 0.6 where that cancellation stays far above 1e-9
    return max(max(identities.beam_splitter_reorder_residual(gamma, 20),
                   identities.beam_splitter_kraus_residual(math.cos(gamma) ** 2, 20)) for gamma in (0.2, 0.4, 0.6))


def _characteristic_function():
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(5):
        p = rng.random(16)
        p /= p.sum()
        eta, z = rng.random(), rng.uniform(-1, 1)
        worst = max(worst, identities.characteristic_function_residual(eta, z, p))
    return worst


def _finite_difference():
    bad = sum(finite_difference_delta(m, j) != (1 if m == j else 0) for j in range(11) for m in range(j + 1))
    return float(bad)


def _detector_array():
    ideal = (np.arange(11) < 3).astype(float)
    devs = [float(np.max(np.abs(detector_array_no_see(n, 3, 10) - ideal))) for n in (8, 16, 32, 64)]
    if any(b >= a for a, b in zip(devs, devs[1:])):
        return math.inf
    return devs[-1]


def _photon_numbers():
    worst = 0.0
    for kind, g in (("universal", 0.5), ("phase-covariant", 0.5)):
        spec = ClonerSpec(kind, g=g)
        n1, n0 = photon_numbers(spec)
        for occ, ref in (((1,), n1), ((0,), n0)):
            st = fock_state(("a",), (1,), occ)
            apply = apply_universal_cloner if kind == "universal" else apply_phase_covariant_cloner
            out = apply(st, ("a",), g, cutoff=40)
            worst = max(worst, abs(expect(out, lambda o: o.n("a")) - ref))
    spec = ClonerSpec("measure-prepare", alpha2=4.0)
    na, nap = photon_numbers(spec)
    st = fock_state(("a", "a_perp"), (1, 1), (1, 0))
    out = apply_mp_cloner(st, ("a", "a_perp"), 4.0, cutoff=30)
    worst = max(worst, abs(expect(out, lambda o: o.n("a")) - na), abs(expect(out, lambda o: o.n("a_perp")) - nap))
    return worst


def _povm_equivalence():
    worst = 0.0
    for spec in (ClonerSpec("universal", g=0.6), ClonerSpec("phase-covariant", g=0.4),
                 ClonerSpec("measure-prepare", alpha2=20.0)):
        for det in (EYE, DetectorSpec(0.5, 3)):
            ref = restricted_povm_oracle(spec, det)
            gen = restricted_gen(spec, det.eta, det.theta + 2)
            for i, entry in enumerate(("pp", "mm", "oo")):
                out = analyzer_probs(gen, entry, det)
                for name, val in zip(("p_a", "p_aperp", "p_null"), out.as_tuple()):
                    worst = max(worst, abs(val - ref[name][i, i]))
            for name in ("p_a", "p_aperp", "p_null"):
                off = ref[name] - np.diag(np.diag(ref[name]))
                worst = max(worst, float(np.max(np.abs(off))))
    return worst


def _normalization():
    worst = 0.0
    for spec in (ClonerSpec("universal", g=1.0), ClonerSpec("phase-covariant", g=1.0),
                 ClonerSpec("measure-prepare", alpha2=10.0)):
        gen = restricted_gen(spec, 0.3, 4)
        worst = max(worst, max(abs(gen.value(e, 1.0, 1.0) - 1.0) for e in ("pp", "mm", "oo")))
    return worst


def _witness_pc():
    worst = 0.0
    for chi, lam in ((0.5, 0.2), (0.8, 0.6)):
        w, n = witness_oracle("phase-covariant", chi, lam)
        ref = witness("phase-covariant", chi, lam)
        worst = max(worst, abs(w - ref.W), abs(n - ref.N))
    return worst


def _witness_universal():
    w, n = witness_oracle("universal", 0.5, 0.2)
    ref = witness("universal", 0.5, 0.2)
    return max(abs(w - ref.W), abs(n - ref.N))


def _doped_fiber():
    st = make_singlet(1)
    a = apply_universal_cloner(st, ("a", "a_perp"), 0.3, cutoff=24)
    b = master_equation_doped_fiber(st, ("a", "a_perp"), 0.3, cutoff=24)
    return float(np.max(np.abs(a.matrix - b.matrix)))


CHECKS = (
    Check("reorder_squeeze", 1e-9, _reorder_squeeze, "one-mode squeezer ordered form vs matrix exponential"),
    Check("reorder_two_mode", 1e-9, _reorder_two_mode, "two-mode squeezer ordered form vs matrix exponential"),
    Check("reorder_beam_splitter", 1e-9, _reorder_beam_splitter, "beam-splitter ordered form and loss Kraus terms"),
    Check("characteristic_function", 1e-12, _characteristic_function, "loss maps z^n to (eta z + 1 - eta)^n"),
    Check("finite_difference_delta", 0.0, _finite_difference, "exact delta identity, count of failures"),
    Check("detector_array_limit", 0.15, _detector_array, "array no-see deviation at N=64 (inf if not monotone)"),
    Check("photon_numbers", 1e-7, _photon_numbers, "oracle clone photon numbers vs closed forms"),
    Check("povm_equivalence", 1e-7, _povm_equivalence, "analyzer probabilities, oracle vs generating functions"),
    Check("normalization", 1e-12, _normalization, "restricted generating functions equal 1 at (1, 1)"),
    Check("witness_phase_covariant", 1e-5, _witness_pc, "damped witness, master equation vs closed form"),
    Check("witness_universal", 1e-5, _witness_universal, "damped witness, master equation vs closed form"),
    Check("doped_fiber", 1e-6, _doped_fiber, "doped-fiber master equation vs universal cloner"),
)


def run_checks(only=(), inject=None) -> list:
    """Run the suite; returns dicts with name, residual, tolerance, passed, description.

    ``inject`` maps check names to an extra residual added after the fact,
    which lets the pass/fail plumbing itself be tested.
    """
    from .errors import InvalidArgument

    inject = dict(inject or {})
    names = {c.name for c in CHECKS}
    unknown = sorted((set(only) | set(inject)) - names)
    if unknown:
        raise InvalidArgument(f"unknown checks: {', '.join(unknown)}")
    rows = []
    for c in CHECKS:
        if only and c.name not in only:
            continue
        residual = float(c.func()) + inject.get(c.name, 0.0)
        rows.append({
            "name": c.name,
            "residual": residual,
            "tolerance": c.tolerance,
            "passed": bool(residual <= c.tolerance),
            "description": c.description,
        })
    return rows
