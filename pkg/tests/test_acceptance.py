"""End-to-end acceptance criteria, one test each.

Every test logs a single PASS/FAIL line that is repeated in the terminal
summary, then asserts.  Criteria with a runtime budget fail when they
exceed it.
"""

import math
from fractions import Fraction
from time import perf_counter

import numpy as np

from macroqubit.cli import main
from macroqubit.cloners import ClonerSpec, fidelity, gain_for_mean_photons, photon_numbers, restricted_gen
from macroqubit.detection import EYE, DetectorSpec, analyzer_probs, detector_array_no_see, finite_difference_delta
from macroqubit.micro_macro import loss_before_threshold, witness, witness_loss_before
from macroqubit.micro_micro import CHSH_LIMIT, CHSH_SETTINGS, entanglement_bound, sample_events, visibility
from macroqubit.oracle import identities
from macroqubit.oracle.channels import apply_phase_covariant_cloner, apply_universal_cloner
from macroqubit.oracle.master import master_equation_doped_fiber
from macroqubit.oracle.observables import expect, witness_oracle
from macroqubit.oracle.restriction import oracle_cutoff, output_distributions, restricted_povm_oracle
from macroqubit.oracle.state import fock_state, make_singlet

KINDS = ("universal", "phase-covariant", "measure-prepare")


def _judge(log, number, title, body, budget=None):
    t0 = perf_counter()
    try:
        ok, detail = body()
    except Exception as exc:
        log((number, title, False, f"raised {type(exc).__name__}: {exc}"))
        raise
    elapsed = perf_counter() - t0
    if budget is not None and elapsed > budget:
        ok = False
        detail += f"; exceeded {budget:g} s budget"
    detail += f" ({elapsed:.1f} s)"
    log((number, title, bool(ok), detail))
    print(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
    assert ok, detail


def test_photon_number_laws(acceptance_log):
    def body():
        worst_analytic = worst_oracle = 0.0
        for g in (0.2, 0.5, 0.8):
            s2 = math.sinh(g) ** 2
            for kind, k1, apply in (("universal", 2, apply_universal_cloner),
                                    ("phase-covariant", 3, apply_phase_covariant_cloner)):
                spec = ClonerSpec(kind, g=g)
                expected = (k1 * s2 + 1, s2)
                gen = restricted_gen(spec, 1.0, 2)
                analytic = (photon_numbers(spec)[0], photon_numbers(spec)[1], gen.moment("pp", 0), gen.moment("oo", 0))
                worst_analytic = max(worst_analytic, *(abs(a - e) for a, e in zip(analytic, expected * 2)))
                cutoff = max(40, oracle_cutoff(kind, g))
                for occ, ref in ((1, expected[0]), (0, expected[1])):
                    out = apply(fock_state(("a",), (1,), (occ,)), ("a",), g, cutoff=cutoff)
                    worst_oracle = max(worst_oracle, abs(expect(out, lambda o: o.n("a")) - ref))
        for a2 in (1.0, 4.0, 16.0):
            spec = ClonerSpec("measure-prepare", alpha2=a2)
            expected = (0.75 * a2, 0.25 * a2)
            gen = restricted_gen(spec, 1.0, 2)
            analytic = (*photon_numbers(spec), gen.moment("pp", 0), gen.moment("pp", 1))
            worst_analytic = max(worst_analytic, *(abs(a - e) for a, e in zip(analytic, expected * 2)))
            joint = output_distributions(spec, 1.0)[(0, 0)]
            n = np.arange(joint.shape[0])
            oracle = (float(joint.sum(axis=1) @ n), float(joint.sum(axis=0) @ n))
            worst_oracle = max(worst_oracle, *(abs(o - e) for o, e in zip(oracle, expected)))
        ok = worst_analytic <= 1e-7 and worst_oracle <= 1e-7
        return ok, f"max deviation analytic {worst_analytic:.1e}, oracle {worst_oracle:.1e} (tol 1e-7)"

    _judge(acceptance_log, 1, "photon-number laws", body, budget=10)


def test_fidelity_asymptotics(acceptance_log):
    def body():
        fu = fidelity(ClonerSpec("universal", g=10.0))
        fp = fidelity(ClonerSpec("phase-covariant", g=10.0))
        fm = [fidelity(ClonerSpec("measure-prepare", alpha2=a)) for a in (0.5, 16.0, 1e4)]
        ok = abs(fu - 2 / 3) <= 1e-3 and abs(fp - 3 / 4) <= 1e-3 and all(f == 0.75 for f in fm)
        return ok, f"universal {fu:.9f}, phase-covariant {fp:.9f}, measure-prepare {set(fm)}"

    _judge(acceptance_log, 2, "fidelity asymptotics", body)


def test_povm_equivalence(acceptance_log):
    gains = {"universal": (0.3, 0.8, 1.5), "phase-covariant": (0.3, 0.6, 1.0), "measure-prepare": (2.0, 10.0, 30.0)}

    def body():
        worst, cases = 0.0, 0
        for kind, strengths in gains.items():
            for s in strengths:
                spec = ClonerSpec.with_strength(kind, s)
                for eta in (0.07, 0.5, 1.0):
                    for theta in (1, 3, 7):
                        det = DetectorSpec(eta, theta)
                        ref = restricted_povm_oracle(spec, det)
                        gen = restricted_gen(spec, eta, theta + 2)
                        for i, entry in enumerate(("pp", "mm", "oo")):
                            got = analyzer_probs(gen, entry, det).as_tuple()
                            for name, val in zip(("p_a", "p_aperp", "p_null"), got):
                                worst = max(worst, abs(val - ref[name][i, i]))
                        for name in ("p_a", "p_aperp", "p_null"):
                            worst = max(worst, float(np.max(np.abs(ref[name] - np.diag(np.diag(ref[name]))))))
                        cases += 1
        return worst <= 1e-7, f"{cases} settings, max |oracle - analytic| {worst:.1e} (tol 1e-7)"

    _judge(acceptance_log, 3, "oracle vs analytic POVM", body, budget=300)


def test_reordering_identities(acceptance_log):
    def body():
        res = {
            "one-mode squeezer": max(identities.squeeze_reorder_residual(g, 20) for g in (0.2, 0.4, 0.6)),
            "two-mode squeezer": max(identities.two_mode_reorder_residual(g, 20) for g in (0.2, 0.4, 0.6)),
            "beam splitter": max(identities.beam_splitter_reorder_residual(g, 20) for g in (0.2, 0.4, 0.6)),
        }
        ok = all(v <= 1e-9 for v in res.values())
        return ok, ", ".join(f"{k} {v:.1e}" for k, v in res.items()) + " (tol 1e-9)"

    _judge(acceptance_log, 4, "reordering identities", body)


def test_detector_array_limit(acceptance_log):
    def body():
        ideal = (np.arange(11) < 3).astype(float)
        devs = [float(np.max(np.abs(detector_array_no_see(n, 3, 10) - ideal))) for n in (8, 16, 32, 64)]
        monotone = all(b < a for a, b in zip(devs, devs[1:]))
        deltas = all(finite_difference_delta(m, j) == Fraction(int(m == j)) for j in range(11) for m in range(j + 1))
        ok = monotone and devs[-1] <= 0.15 and deltas
        return ok, (f"deviations {', '.join(f'{d:.4f}' for d in devs)}; monotone {monotone}; "
                    f"exact delta identity {deltas}")

    _judge(acceptance_log, 5, "detector-array limit", body)


def test_doped_fiber_equivalence(acceptance_log):
    def body():
        worst = 0.0
        singlet = make_singlet(1)
        for g in (0.1, 0.3, 0.5):
            a = apply_universal_cloner(singlet, ("a", "a_perp"), g, cutoff=24)
            b = master_equation_doped_fiber(singlet, ("a", "a_perp"), g, cutoff=24)
            worst = max(worst, float(np.max(np.abs(a.matrix - b.matrix))))
        return worst <= 1e-6, f"max entry difference {worst:.1e} (tol 1e-6)"

    _judge(acceptance_log, 6, "doped-fiber equivalence", body)


def test_visibility_bounds(acceptance_log):
    def body():
        peaks, max_pv = {}, -math.inf
        for kind in KINDS:
            pts = [visibility(ClonerSpec.with_strength(kind, gain_for_mean_photons(kind, n)), EYE)
                   for n in np.geomspace(1.5, 3000, 60)]
            vals = [p for p in pts if not math.isnan(p.V)]
            peaks[kind] = max(p.V for p in vals)
            max_pv = max(max_pv, max(p.V * p.P_conclusive for p in vals))
        above = all(peaks[k] > entanglement_bound(k) for k in KINDS)
        ok = above and peaks["measure-prepare"] > CHSH_LIMIT and max_pv <= CHSH_LIMIT + 1e-9
        return ok, (", ".join(f"peak V {k} {v:.4f}" for k, v in peaks.items())
                    + f"; max P*V {max_pv:.4f} (limit {CHSH_LIMIT:.4f})")

    _judge(acceptance_log, 7, "visibility bounds", body, budget=120)


def test_witness_closed_forms(acceptance_log):
    def body():
        worst = 0.0
        for kind in ("universal", "phase-covariant"):
            for chi in (0.0, 0.4, 0.8, 1.2):
                for lam in (0.0, 0.3, 0.6):
                    w, n = witness_oracle(kind, chi, lam)
                    ref = witness(kind, chi, lam)
                    worst = max(worst, abs(w - ref.W), abs(n - ref.N))
        lossless = all(witness(k, c, 0.0).W == 2.0 for k in ("universal", "phase-covariant")
                       for c in np.linspace(0, 5, 51))
        eps = np.finfo(float).eps
        thresh = max(abs(witness_loss_before(p, loss_before_threshold(p))) / (eps * max(1.0, p / (1 - p)))
                     for p in np.linspace(0.01, 0.99, 99))
        ok = worst <= 1e-5 and lossless and thresh <= 8
        return ok, (f"max |oracle - closed form| {worst:.1e} (tol 1e-5); W = 2 at lambda = 0 {lossless}; "
                    f"loss-before threshold residual {thresh:.1f} ulp")

    _judge(acceptance_log, 8, "witness closed forms", body)


def test_monte_carlo_consistency(acceptance_log):
    def body():
        spec = ClonerSpec("measure-prepare", alpha2=40.0)
        v = visibility(spec, EYE).V
        tally = sample_events(spec, EYE, CHSH_SETTINGS, 1_000_000, seed=20240611)
        z = [abs(tally.visibility(i) - v) / tally.visibility_stderr(i) for i in range(len(CHSH_SETTINGS))]
        s = tally.chsh(postselect=True)
        ok = max(z) <= 5 and s > 2
        return ok, f"analytic V {v:.4f}, max |z| {max(z):.2f} (limit 5), post-selected S {s:.3f}"

    _judge(acceptance_log, 9, "Monte Carlo consistency", body)


def test_determinism(acceptance_log, tmp_path):
    def body():
        outs = [tmp_path / f"run{i}.csv" for i in range(3)]
        codes = [
            main(["visibility", "--seed", "7", "--output", str(outs[0])]),
            main(["visibility", "--seed", "7", "--output", str(outs[1])]),
            main(["visibility", "--seed", "7", "--output", str(outs[2]), "--workers", "4"]),
        ]
        blobs = [p.read_bytes() for p in outs]
        ok = codes == [0, 0, 0] and blobs[0] == blobs[1] == blobs[2]
        return ok, f"exit codes {codes}, {len(blobs[0])} bytes, identical {blobs[0] == blobs[1] == blobs[2]}"

    _judge(acceptance_log, 10, "determinism", body)
