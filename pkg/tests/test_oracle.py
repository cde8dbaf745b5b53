import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macroqubit.errors import ContractViolation, InvalidArgument, TruncationError
from macroqubit.micro_macro import witness_universal
from macroqubit.oracle import identities
from macroqubit.oracle.channels import (
    apply_loss,
    apply_mp_cloner,
    apply_phase_covariant_cloner,
    apply_universal_cloner,
    loss_kraus,
    squeeze_unitary,
    universal_kraus,
)
from macroqubit.oracle.master import apply_damped_hamiltonian, master_equation_doped_fiber
from macroqubit.oracle.observables import expect, witness_from_state, witness_oracle
from macroqubit.oracle.state import TruncatedState, fock_state, from_ket, make_singlet, vacuum

SINGLET_MODES = ("a", "a_perp", "b", "b_perp")


def random_state(rng, modes, cutoffs, rank=3):
    d = int(np.prod([c + 1 for c in cutoffs]))
    x = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = x @ x.conj().T
    return TruncatedState(modes, cutoffs, rho / np.trace(rho))


# -- states ---------------------------------------------------------------


def test_singlet_at_cutoff_one():
    rho = make_singlet(1).matrix
    diag = np.real(np.diag(rho))
    assert np.count_nonzero(np.abs(diag) > 1e-15) == 2
    np.testing.assert_allclose(diag[diag > 0], [0.5, 0.5])
    i, j = np.flatnonzero(diag > 0)
    assert rho[i, j] == pytest.approx(-0.5)


def test_singlet_ignores_higher_cutoff():
    small, big = make_singlet(1), make_singlet(3)
    assert np.count_nonzero(np.abs(big.matrix) > 1e-15) == np.count_nonzero(np.abs(small.matrix) > 1e-15) == 4
    assert big.trace() == pytest.approx(1.0)


def test_singlet_marginal_is_maximally_mixed():
    red = make_singlet(2).partial_trace(("a", "a_perp"))
    pops = {occ: red.matrix[red.dims[1] * occ[0] + occ[1], red.dims[1] * occ[0] + occ[1]].real
            for occ in [(1, 0), (0, 1)]}
    assert pops == {(1, 0): pytest.approx(0.5), (0, 1): pytest.approx(0.5)}
    assert red.trace() == pytest.approx(1.0)


@pytest.mark.parametrize("cutoff", [0, -1])
def test_singlet_rejects_bad_cutoff(cutoff):
    with pytest.raises(InvalidArgument):
        make_singlet(cutoff)


def test_index_convention_is_row_major():
    st_ = fock_state(("a", "b"), (2, 1), (2, 0))
    assert np.argmax(np.real(np.diag(st_.matrix))) == 4


def test_swap_symmetry_of_mode_order(rng):
    st_ = random_state(rng, ("a", "b"), (2, 1))
    swapped = st_.reorder(("b", "a"))
    np.testing.assert_allclose(swapped.populations("a"), st_.populations("a"))
    np.testing.assert_allclose(swapped.reorder(("a", "b")).matrix, st_.matrix)
    np.testing.assert_allclose(st_.tensor().transpose(1, 0, 3, 2), swapped.tensor())


# -- loss -------------------------------------------------------------------


def test_loss_identity_at_full_transmission(rng):
    st_ = random_state(rng, ("a", "a_perp"), (3, 3))
    out = apply_loss(st_, ("a", "a_perp"), 1.0)
    np.testing.assert_allclose(out.matrix, st_.matrix, atol=1e-14)


def test_full_loss_gives_vacuum():
    out = apply_loss(fock_state(("a",), (1,), (1,)), ("a",), 0.0)
    np.testing.assert_allclose(out.matrix, vacuum(("a",), 1).matrix, atol=1e-15)


def test_half_loss_on_two_photons():
    out = apply_loss(fock_state(("a",), (2,), (2,)), ("a",), 0.5)
    np.testing.assert_allclose(np.real(np.diag(out.matrix)), [0.25, 0.5, 0.25], atol=1e-14)


@pytest.mark.parametrize("eta", [-0.1, 1.5])
def test_loss_rejects_bad_eta(eta):
    with pytest.raises(InvalidArgument):
        apply_loss(vacuum(("a",), 1), ("a",), eta)


@settings(max_examples=15)
@given(eta=st.floats(0.0, 1.0), seed=st.integers(0, 2**32 - 1))
def test_loss_preserves_trace_and_positivity(eta, seed):
    st_ = random_state(np.random.default_rng(seed), ("a", "a_perp"), (3, 2))
    out = apply_loss(st_, ("a", "a_perp"), eta)
    out.validate(trace_tol=1e-10)


@pytest.mark.parametrize("eta", [0.0, 0.07, 0.5, 1.0])
def test_loss_kraus_complete(eta):
    kraus = loss_kraus(eta, 12)
    np.testing.assert_allclose(sum(k.conj().T @ k for k in kraus), np.eye(13), atol=1e-10)


@pytest.mark.parametrize("g", [0.1, 0.5])
def test_universal_kraus_complete_on_low_block(g):
    kraus = universal_kraus(g, 4, 120)
    np.testing.assert_allclose(sum(k.conj().T @ k for k in kraus), np.eye(5), atol=1e-10)


# -- cloners ----------------------------------------------------------------


def test_universal_at_zero_gain_is_identity(rng):
    st_ = random_state(rng, ("a", "a_perp"), (2, 2))
    out = apply_universal_cloner(st_, ("a", "a_perp"), 0.0)
    np.testing.assert_allclose(out.matrix, st_.matrix, atol=1e-14)


@pytest.mark.parametrize("n, law", [(1, lambda s2: 2 * s2 + 1), (0, lambda s2: s2)])
def test_universal_photon_numbers(n, law):
    out = apply_universal_cloner(fock_state(("a",), (1,), (n,)), ("a",), 0.5, cutoff=40)
    assert expect(out, lambda o: o.n("a")) == pytest.approx(law(math.sinh(0.5) ** 2), abs=1e-10)
    out.validate(trace_tol=1e-9)


def test_truncation_overflow_names_the_mode():
    st_ = make_singlet(1)
    with pytest.raises(TruncationError) as exc:
        apply_universal_cloner(st_, ("a", "a_perp"), 1.5, cutoff=5)
    assert exc.value.mode in ("a", "a_perp")


def test_phase_covariant_at_zero_gain_is_identity(rng):
    st_ = random_state(rng, ("a",), (3,))
    out = apply_phase_covariant_cloner(st_, ("a",), 0.0)
    np.testing.assert_allclose(out.matrix, st_.matrix, atol=1e-14)


@pytest.mark.parametrize("n, law", [(1, lambda s2: 3 * s2 + 1), (0, lambda s2: s2)])
def test_phase_covariant_photon_numbers(n, law):
    out = apply_phase_covariant_cloner(fock_state(("a",), (1,), (n,)), ("a",), 0.5, cutoff=40)
    assert expect(out, lambda o: o.n("a")) == pytest.approx(law(math.sinh(0.5) ** 2), abs=1e-10)


def test_phase_covariant_output_stays_pure():
    st_ = from_ket(("a", "a_perp"), (1, 1), {(1, 0): 1.0, (0, 1): 0.6})
    out = apply_phase_covariant_cloner(st_, ("a", "a_perp"), 0.4, cutoff=30)
    assert out.purity() == pytest.approx(1.0, abs=1e-10)


def test_measure_prepare_photon_numbers():
    st_ = fock_state(("a", "a_perp"), (1, 1), (1, 0))
    out = apply_mp_cloner(st_, ("a", "a_perp"), 4.0, cutoff=30)
    assert expect(out, lambda o: o.n("a")) == pytest.approx(3.0, abs=1e-10)
    assert expect(out, lambda o: o.n("a_perp")) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("alpha2", [0.5, 3.0, 9.0])
def test_measure_prepare_fidelity_is_three_quarters(alpha2):
    st_ = fock_state(("a", "a_perp"), (1, 1), (1, 0))
    out = apply_mp_cloner(st_, ("a", "a_perp"), alpha2, cutoff=40)
    na, nap = (expect(out, lambda o, m=m: o.n(m)) for m in ("a", "a_perp"))
    assert na / (na + nap) == pytest.approx(0.75, abs=1e-10)


def test_measure_prepare_breaks_entanglement():
    out = apply_mp_cloner(make_singlet(1), ("a", "a_perp"), 2.0, cutoff=25)
    w, _ = witness_from_state(out)
    assert w <= 1e-10


# -- master equation ----------------------------------------------------------


def test_undamped_phase_covariant_equals_squeezer():
    st_ = fock_state(("a",), (1,), (1,))
    me = apply_damped_hamiltonian(st_, "phase-covariant", 0.5, 0.0, modes=("a",), cutoff=60)
    u = squeeze_unitary(0.5, 1, 60)
    ref = u[:, 1:2] @ u[:, 1:2].conj().T
    # compare away from the cutoff, where both are converged
    np.testing.assert_allclose(me.matrix[:30, :30], ref[:30, :30], atol=1e-8)


@pytest.mark.parametrize("lam", [0.3, 1.0])
def test_pure_damping_equals_loss(lam, rng):
    st_ = random_state(rng, ("a", "a_perp"), (4, 4))
    for kind in ("phase-covariant", "universal"):
        me = apply_damped_hamiltonian(st_, kind, 0.0, lam, cutoff=4, anticlone_cutoff=1)
        ref = apply_loss(st_, ("a", "a_perp"), math.exp(-lam))
        np.testing.assert_allclose(me.matrix, ref.matrix, atol=1e-10)


def test_damped_universal_moments_match_closed_form():
    w, n = witness_oracle("universal", 0.5, 0.2)
    ref = witness_universal(0.5, 0.2)
    assert w == pytest.approx(ref.W, abs=1e-6)
    assert n == pytest.approx(ref.N, abs=1e-6)


def test_phase_covariant_hv_conserves_population_difference():
    st_ = fock_state(("h", "v"), (1, 1), (1, 0))
    out = apply_damped_hamiltonian(st_, "phase-covariant", 0.4, 0.0, modes=("h", "v"), cutoff=30, basis="hv")
    diff = expect(out, lambda o: o.n("h") - o.n("v"))
    assert diff == pytest.approx(1.0, abs=1e-8)
    # total 1 + 4 sinh^2, as in the equatorial basis
    assert expect(out, lambda o: o.n("v")) == pytest.approx(2 * math.sinh(0.4) ** 2, abs=1e-8)


def test_damped_rejects_negative_rates():
    with pytest.raises(InvalidArgument):
        apply_damped_hamiltonian(vacuum(("a",), 2), "universal", -1.0, 0.0, modes=("a",))


def test_doped_fiber_at_zero_gain_is_identity():
    st_ = make_singlet(2)
    out = master_equation_doped_fiber(st_, ("a", "a_perp"), 0.0)
    np.testing.assert_allclose(out.matrix, st_.matrix, atol=1e-15)


def test_doped_fiber_on_vacuum():
    out = master_equation_doped_fiber(vacuum(("a",), 1), ("a",), 0.3, cutoff=30)
    assert expect(out, lambda o: o.n("a")) == pytest.approx(math.sinh(0.3) ** 2, abs=1e-6)


def test_doped_fiber_matches_universal_cloner_on_singlet():
    st_ = make_singlet(1)
    a = apply_universal_cloner(st_, ("a", "a_perp"), 0.3, cutoff=24)
    b = master_equation_doped_fiber(st_, ("a", "a_perp"), 0.3, cutoff=24)
    assert np.max(np.abs(a.matrix - b.matrix)) < 1e-6


# -- observables ----------------------------------------------------------------


def test_vacuum_has_no_photons():
    assert expect(vacuum(("a", "b"), 2), lambda o: o.n("a") + o.n("b")) == 0.0


@pytest.mark.parametrize("n", [0, 1, 3])
def test_fock_projector(n):
    assert expect(fock_state(("a",), (3,), (n,)), lambda o: o.proj("a", n)) == pytest.approx(1.0)


def test_non_hermitian_expectation_is_rejected():
    st_ = from_ket(("a",), (1,), {(0,): 1.0, (1,): 1j})
    with pytest.raises(ContractViolation):
        expect(st_, lambda o: o.a("a"))


def test_singlet_witness_is_two():
    w, n = witness_from_state(make_singlet(1))
    assert (w, n) == (pytest.approx(2.0), pytest.approx(1.0))


def test_correlations_follow_single_photon_images():
    # <J_z sigma_z> on the amplified singlet equals minus the population
    # imbalance of an amplified |1, 0>; the b side never evolves
    st_ = apply_universal_cloner(make_singlet(1), ("a", "a_perp"), 0.4, cutoff=20)
    corr = expect(st_, lambda o: (o.n("a") - o.n("a_perp")) @ (o.n("b") - o.n("b_perp")))
    one = apply_universal_cloner(fock_state(("a", "a_perp"), (1, 1), (1, 0)), ("a", "a_perp"), 0.4, cutoff=20)
    imbalance = expect(one, lambda o: o.n("a") - o.n("a_perp"))
    assert corr == pytest.approx(-imbalance, abs=1e-8)


def test_loss_after_amplification_scales_correlator():
    amp = apply_phase_covariant_cloner(make_singlet(1), ("a", "a_perp"), 0.3, cutoff=20)
    w0, n0 = witness_from_state(amp)
    lossy = apply_loss(amp, ("a", "a_perp"), 0.4)
    w1, n1 = witness_from_state(lossy)
    assert n1 == pytest.approx(0.4 * n0, abs=1e-9)
    assert w1 + n1 == pytest.approx(0.4 * (w0 + n0), abs=1e-9)


# -- identities -------------------------------------------------------------------


@pytest.mark.parametrize("g", [0.1, 0.3, 0.6])
def test_reordering_identities(g):
    assert identities.squeeze_reorder_residual(g, 20) < 1e-9
    assert identities.two_mode_reorder_residual(g, 20) < 1e-9
    assert identities.beam_splitter_reorder_residual(g, 20) < 1e-9


@pytest.mark.parametrize("eta", [0.1, 0.5, 0.93])
def test_beam_splitter_produces_loss_kraus(eta):
    assert identities.beam_splitter_kraus_residual(eta, 15) < 1e-12


@settings(max_examples=25)
@given(eta=st.floats(0.0, 1.0), z=st.floats(-1.0, 1.0), seed=st.integers(0, 10_000))
def test_loss_characteristic_function(eta, z, seed):
    p = np.random.default_rng(seed).random(12)
    assert identities.characteristic_function_residual(eta, z, p / p.sum()) < 1e-12
