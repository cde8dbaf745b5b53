r"""Lindblad master equations on a reachable sector of Liouville space.

Every Hamiltonian and jump operator used here is a sum of *monomials*:
products of single-mode ladder powers, each of which sends a Fock basis
vector to a single other basis vector.  That makes every superoperator term
a partial permutation of matrix-element pairs ``(i, j)`` with a weight, so
the set of pairs reachable from the initial support can be enumerated by a
breadth-first closure and the Liouvillian built only on that sector.

Dynamics on disjoint blocks of modes commute, so the state is evolved one
block at a time.  Within a block the density matrix is reshaped to
``(block pair) x (rest pair)`` and only the nonzero rest columns are kept.

Time integration is classical RK4 with a fixed step, repeated with half the
step until two successive results agree; leakage past the cutoff is caught
through the untruncated ``L^+ L`` diagonal, which makes the trace drop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import InvalidArgument, NumericError, TruncationError
from .state import TAIL_TOL, TruncatedState

__all__ = [
    "Monomial",
    "BlockLindbladian",
    "apply_damped_hamiltonian",
    "master_equation_doped_fiber",
    "damped_block_model",
    "propagate_pairs",
    "integrate",
    "doped_fiber_time",
]

TRACE_DRIFT_TOL = 1e-8

# single-mode ladder factors: (shift, amplitude as a function of n)
_FACTORS = {
    "a": (-1, lambda n: np.sqrt(n)),
    "ad": (1, lambda n: np.sqrt(n + 1.0)),
    "a2": (-2, lambda n: np.sqrt(n * np.maximum(n - 1.0, 0.0))),
    "ad2": (2, lambda n: np.sqrt((n + 1.0) * (n + 2.0))),
}


@dataclass(frozen=True)
class Monomial:
    """``coef * prod_k op_k`` with ``op_k`` one of ``a, ad, a2, ad2`` on block mode ``k``.

    ``ops`` maps a block-mode position to its factor name; absent modes get
    the identity.
    """

    coef: complex
    ops: tuple  # ((position, name), ...)

    def action(self, occ: np.ndarray, cutoffs) -> tuple:
        """Target occupations, amplitude and validity for every basis row of ``occ``."""
        target = occ.copy()
        amp = np.full(occ.shape[0], complex(self.coef))
        for pos, name in self.ops:
            shift, f = _FACTORS[name]
            n = occ[:, pos].astype(float)
            amp = amp * f(n)
            target[:, pos] = occ[:, pos] + shift
        valid = np.all((target >= 0) & (target <= np.asarray(cutoffs)), axis=1) & (amp != 0)
        return target, amp, valid

    def norm_diag(self, occ: np.ndarray) -> np.ndarray:
        """Untruncated diagonal of ``M^+ M`` (all monomials here are ladder products)."""
        out = np.full(occ.shape[0], abs(self.coef) ** 2)
        for pos, name in self.ops:
            out = out * _FACTORS[name][1](occ[:, pos].astype(float)) ** 2
        return out


class BlockLindbladian:
    r"""``L rho = -i[H, rho] + sum_k (L_k rho L_k^+ - 1/2 {L_k^+ L_k, rho})`` on a block.

    Parameters
    ----------
    cutoffs : sequence of int
        Cutoff of each block mode.
    hamiltonian : list of Monomial
        Terms whose sum is Hermitian.
    jumps : list of Monomial
        Jump operators (rates folded into the coefficients).
    """

    def __init__(self, cutoffs, hamiltonian, jumps):
        self.cutoffs = tuple(int(c) for c in cutoffs)
        self.dims = tuple(c + 1 for c in self.cutoffs)
        self.dim = int(np.prod(self.dims))
        self.hamiltonian = list(hamiltonian)
        self.jumps = list(jumps)
        occ = np.array(np.unravel_index(np.arange(self.dim), self.dims)).T
        self._occ = occ
        self._left = []  # (target index, amplitude) pairs for rho -> M rho
        for m in self.hamiltonian:
            self._left.append(self._table(m))
        self._jump = [self._table(m) for m in self.jumps]
        diag = np.zeros(self.dim)
        for m in self.jumps:
            diag += m.norm_diag(occ)
        self._decay = diag

    def _table(self, m: Monomial):
        target, amp, valid = m.action(self._occ, self.cutoffs)
        idx = np.full(self.dim, -1, dtype=np.int64)
        idx[valid] = np.ravel_multi_index(tuple(target[valid].T), self.dims)
        return idx, np.where(valid, amp, 0.0)

    # sector construction --------------------------------------------------

    def _images(self, i, j):
        """All ``(i', j', weight)`` triples reached in one superoperator step."""
        out = []
        for idx, amp in self._left:
            ti = idx[i]
            ok = ti >= 0
            out.append((ti[ok], j[ok], -1j * amp[i][ok], ok))
            tj = idx[j]
            ok = tj >= 0
            out.append((i[ok], tj[ok], 1j * np.conj(amp[j][ok]), ok))
        for idx, amp in self._jump:
            ti, tj = idx[i], idx[j]
            ok = (ti >= 0) & (tj >= 0)
            out.append((ti[ok], tj[ok], amp[i][ok] * np.conj(amp[j][ok]), ok))
        return out

    def sector(self, seed_codes: np.ndarray) -> np.ndarray:
        """Sorted pair codes ``i * dim + j`` reachable from ``seed_codes``."""
        known = np.unique(seed_codes.astype(np.int64))
        frontier = known
        while frontier.size:
            i, j = np.divmod(frontier, self.dim)
            new = [ti * self.dim + tj for ti, tj, _, _ in self._images(i, j)]
            cand = np.unique(np.concatenate(new)) if new else np.empty(0, np.int64)
            frontier = np.setdiff1d(cand, known, assume_unique=True)
            known = np.union1d(known, frontier)
        return known

    def matrix(self, codes: np.ndarray) -> sp.csr_matrix:
        """Sparse Liouvillian restricted to the (closed) sector ``codes``."""
        i, j = np.divmod(codes, self.dim)
        src = np.arange(codes.size)
        rows, cols, vals = [], [], []
        for ti, tj, w, ok in self._images(i, j):
            rows.append(np.searchsorted(codes, ti * self.dim + tj))
            cols.append(src[ok])
            vals.append(w)
        rows.append(src)
        cols.append(src)
        vals.append(-0.5 * (self._decay[i] + self._decay[j]).astype(complex))
        n = codes.size
        data = np.concatenate(vals)
        if not np.any(data.imag):
            data = data.real  # real generators (all the cloners here) run twice as fast
        return sp.csr_matrix((data, (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def _rk4(lmat, x0, t, steps):
    h = t / steps
    x = x0.copy()
    for _ in range(steps):
        k1 = lmat @ x
        k2 = lmat @ (x + 0.5 * h * k1)
        k3 = lmat @ (x + 0.5 * h * k2)
        k4 = lmat @ (x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def integrate(lmat: sp.csr_matrix, x0: np.ndarray, t: float = 1.0, steps: int | None = None,
              tol: float = 1e-10, max_steps: int = 1 << 16) -> np.ndarray:
    """RK4 from ``x0`` over time ``t``; halves the step until two runs agree to ``tol``."""
    if t == 0 or lmat.nnz == 0:
        return x0.copy()
    if steps is None:
        norm = float(abs(lmat).sum(axis=1).max())
        steps = max(4, int(math.ceil(abs(t) * norm / 2.5)))
    prev = _rk4(lmat, x0, t, steps)
    scale = max(1.0, float(np.max(np.abs(x0))))
    while True:
        steps *= 2
        if steps > max_steps:
            raise NumericError(f"RK4 did not converge within {max_steps} steps")
        cur = _rk4(lmat, x0, t, steps)
        # the finer run is ~15x closer to the limit than the difference
        if np.max(np.abs(cur - prev)) / 15.0 <= tol * scale:
            return cur
        prev = cur


# --------------------------------------------------------------------------
# applying block dynamics to a TruncatedState


def propagate_pairs(model: BlockLindbladian, seed_codes, t: float, traced_positions=(),
                    steps=None) -> np.ndarray:
    """Evolve unit matrices ``|i><j|`` (given as pair codes) and trace some block modes.

    Returns an array of shape ``(kd, kd, n_seeds)``: the reduced operator on
    the kept block modes for every seed.
    """
    seed_codes = np.asarray(seed_codes, dtype=np.int64)
    codes = model.sector(seed_codes)
    lmat = model.matrix(codes)
    x0 = np.zeros((codes.size, seed_codes.size), dtype=lmat.dtype)
    x0[np.searchsorted(codes, seed_codes), np.arange(seed_codes.size)] = 1.0
    x = integrate(lmat, x0, t, steps)

    kpos = [p for p in range(len(model.dims)) if p not in traced_positions]
    tpos = list(traced_positions)
    i, j = np.divmod(codes, model.dim)
    oi = np.array(np.unravel_index(i, model.dims)).T
    oj = np.array(np.unravel_index(j, model.dims)).T
    diag_ok = np.all(oi[:, tpos] == oj[:, tpos], axis=1) if tpos else np.ones(codes.size, bool)
    kdims = tuple(model.dims[p] for p in kpos)
    kd = int(np.prod(kdims)) if kpos else 1
    if kpos:
        ki = np.ravel_multi_index(tuple(oi[diag_ok][:, kpos].T), kdims)
        kj = np.ravel_multi_index(tuple(oj[diag_ok][:, kpos].T), kdims)
    else:
        ki = kj = np.zeros(int(diag_ok.sum()), dtype=np.int64)
    flat = np.zeros((kd * kd, seed_codes.size), dtype=x.dtype)
    np.add.at(flat, ki * kd + kj, x[diag_ok])
    return flat.reshape(kd, kd, seed_codes.size)


def _evolve_block(state: TruncatedState, block_modes, block_cutoffs, model: BlockLindbladian,
                  t: float, traced, steps=None):
    """Evolve ``block_modes`` (missing ones start in vacuum), then trace ``traced``."""
    present = [m for m in block_modes if m in state.modes]
    rest = [m for m in state.modes if m not in block_modes]
    st = state
    for m in present:
        st = st.with_cutoff(m, block_cutoffs[block_modes.index(m)])
    st = st.reorder(present + rest)
    n_p = len(present)
    rdims = st.dims[n_p:]
    pdims = st.dims[:n_p]
    pd, rd = int(np.prod(pdims)), int(np.prod(rdims)) if rest else 1
    t4 = st.tensor().reshape(pd, rd, pd, rd).transpose(0, 2, 1, 3).reshape(pd * pd, rd * rd)
    cols = np.flatnonzero(np.any(t4 != 0, axis=0))
    x_small = t4[:, cols]
    # embed present-mode indices into the full block basis (absent modes at 0)
    pocc = np.array(np.unravel_index(np.arange(pd), pdims)).T if n_p else np.zeros((1, 0), int)
    bocc = np.zeros((pd, len(block_modes)), dtype=np.int64)
    for k, m in enumerate(present):
        bocc[:, block_modes.index(m)] = pocc[:, k]
    bidx = np.ravel_multi_index(tuple(bocc.T), model.dims)
    pi, pj = np.divmod(np.arange(pd * pd), pd)
    pair_codes = bidx[pi] * model.dim + bidx[pj]
    # one unit matrix |i><j| per occupied block pair, recombined linearly
    seeds = np.flatnonzero(np.any(x_small != 0, axis=1))
    tpos = [block_modes.index(m) for m in traced]
    red = propagate_pairs(model, pair_codes[seeds], t, tpos, steps)
    kd = red.shape[0]
    out4 = np.zeros((kd * kd, rd * rd), dtype=complex)
    out4[:, cols] = red.reshape(kd * kd, -1) @ x_small[seeds]
    out = out4.reshape(kd, kd, rd, rd).transpose(0, 2, 1, 3).reshape(kd * rd, kd * rd)
    keep = [m for m in block_modes if m not in traced]
    new_modes = tuple(keep) + tuple(rest)
    new_cut = tuple(model.cutoffs[block_modes.index(m)] for m in keep) + tuple(st.cutoffs[n_p:])
    return TruncatedState(new_modes, new_cut, out)


def _finish(result, original, touched, tail_tol):
    """Truncation and trace checks shared by the master-equation entry points.

    A top-level population is only blamed on the cutoff if the dynamics
    raised it above what the input already held at that level (pure decay
    out of a top Fock state is legitimate).
    """
    original_modes = original.modes
    deficit = original.trace() - result.trace()
    tails, grown = {}, {}
    for m in touched:
        if m not in result.modes:
            continue
        level = result.cutoffs[result.index(m)]
        pops = original.populations(m)
        before = pops[level] if level < pops.size else 0.0
        tails[m] = result.tail_mass(m)
        grown[m] = tails[m] - before
    worst = max(tails, key=tails.get) if tails else None
    if worst is not None and tails[worst] > tail_tol and grown[worst] > 1e-14:
        raise TruncationError(
            f"cutoff too small for mode {worst!r}: top-level population {tails[worst]:.3g}",
            mode=worst, tail=tails[worst])
    if abs(deficit) > TRACE_DRIFT_TOL:
        if deficit > 0 and worst is not None:
            raise TruncationError(
                f"trace lost through the cutoff ({deficit:.3g}); enlarge mode {worst!r}",
                mode=worst, tail=deficit)
        raise NumericError(f"trace drift {deficit:.3g} exceeds {TRACE_DRIFT_TOL}")
    return result.reorder(tuple(original_modes)) if set(result.modes) == set(original_modes) else result


def damped_block_model(kind: str, chi: float, lam: float, cutoffs, basis: str = "equatorial",
                       damp_anticlones: bool = True):
    """Return ``[(block_modes_positions, BlockLindbladian)]`` templates for one block.

    For ``universal`` the block is ``(clone, anticlone)`` with
    ``H = i chi a^+ c^+ - i chi a c``; for ``phase-covariant`` in the
    equatorial basis it is one mode with ``H = (i chi/2)(a^{+2} - a^2)``;
    in the h-v basis it is the pair ``(h, v)`` with ``H = i chi a_h^+ a_v^+ + h.c.``.
    Loss jumps ``sqrt(lam) a`` act on the clone modes and, for the universal
    cloner unless disabled, on the anticlone mode.
    """
    r = math.sqrt(lam)
    if kind == "universal":
        h = [Monomial(1j * chi, ((0, "ad"), (1, "ad"))), Monomial(-1j * chi, ((0, "a"), (1, "a")))]
        jumps = [Monomial(r, ((0, "a"),))]
        if damp_anticlones:
            jumps.append(Monomial(r, ((1, "a"),)))
    elif kind == "phase-covariant" and basis == "equatorial":
        h = [Monomial(0.5j * chi, ((0, "ad2"),)), Monomial(-0.5j * chi, ((0, "a2"),))]
        jumps = [Monomial(r, ((0, "a"),))]
    elif kind == "phase-covariant" and basis == "hv":
        h = [Monomial(1j * chi, ((0, "ad"), (1, "ad"))), Monomial(-1j * chi, ((0, "a"), (1, "a")))]
        jumps = [Monomial(r, ((0, "a"),)), Monomial(r, ((1, "a"),))]
    else:
        raise InvalidArgument(f"unknown Hamiltonian kind/basis {kind!r}/{basis!r}")
    if lam == 0:
        jumps = []
    return BlockLindbladian(cutoffs, h, jumps)


def apply_damped_hamiltonian(
    state: TruncatedState,
    kind: str,
    chi: float,
    lam: float,
    modes=("a", "a_perp"),
    cutoff: int | None = None,
    basis: str = "equatorial",
    anticlones=("c_perp", "c"),
    anticlone_cutoff: int | None = None,
    damp_anticlones: bool = True,
    steps: int | None = None,
    tail_tol: float = TAIL_TOL,
) -> TruncatedState:
    r"""Amplify ``modes`` for unit time under a Hamiltonian with photon loss.

    ``kind`` is ``"universal"`` (each clone mode paired with the anticlone
    of the opposite polarization, anticlones traced at the end) or
    ``"phase-covariant"``.  Parameters are already rescaled so the final
    time is 1.

    Raises
    ------
    TruncationError
        If population reaches the cutoff of a touched mode.
    NumericError
        If RK4 fails to converge or the trace drifts without a truncation cause.
    """
    if chi < 0 or lam < 0:
        raise InvalidArgument("chi and lambda must be non-negative")
    modes = tuple(modes)
    cut = state.cutoff if cutoff is None else int(cutoff)
    acut = cut if anticlone_cutoff is None else int(anticlone_cutoff)
    cur = state
    if kind == "universal":
        for clone, anti in zip(modes, anticlones):
            model = damped_block_model(kind, chi, lam, (cut, acut), damp_anticlones=damp_anticlones)
            cur = _evolve_block(cur, [clone, anti], (cut, acut), model, 1.0, [anti], steps)
    elif kind == "phase-covariant" and basis == "equatorial":
        for m in modes:
            model = damped_block_model(kind, chi, lam, (cut,))
            cur = _evolve_block(cur, [m], (cut,), model, 1.0, [], steps)
    elif kind == "phase-covariant" and basis == "hv":
        model = damped_block_model(kind, chi, lam, (cut, cut), basis="hv")
        cur = _evolve_block(cur, list(modes), (cut, cut), model, 1.0, [], steps)
    else:
        raise InvalidArgument(f"unknown Hamiltonian kind/basis {kind!r}/{basis!r}")
    return _finish(cur, state, modes, tail_tol)


def doped_fiber_time(g: float) -> float:
    """Unit-rate evolution time matching a universal cloner of gain ``g``.

    The mean photon number obeys ``n' = n + 1`` so ``n(t) = (n0+1) e^t - 1``,
    which equals ``(n0+1) cosh^2 g - 1`` at ``t = 2 ln cosh g``.
    """
    return 2.0 * math.log(math.cosh(g))


def master_equation_doped_fiber(state: TruncatedState, modes=("a", "a_perp"), g: float = 0.0,
                                cutoff: int | None = None, steps: int | None = None,
                                tail_tol: float = TAIL_TOL) -> TruncatedState:
    r"""Integrate ``rho' = -1/2 (a a^+ rho + rho a a^+ - 2 a^+ rho a)`` on each listed mode.

    Run for time :func:`doped_fiber_time` so the result is comparable with
    the universal cloner of the same gain.
    """
    if g < 0:
        raise InvalidArgument(f"gain must be >= 0, got {g!r}")
    if isinstance(modes, str):
        modes = (modes,)
    cut = state.cutoff if cutoff is None else int(cutoff)
    t = doped_fiber_time(g)
    cur = state
    if t > 0:
        model = BlockLindbladian((cut,), [], [Monomial(1.0, ((0, "ad"),))])
        for m in modes:
            cur = _evolve_block(cur, [m], (cut,), model, t, [], steps)
    else:
        for m in modes:
            cur = cur.with_cutoff(m, cut)
    return _finish(cur, state, modes, tail_tol)
