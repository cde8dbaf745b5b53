"""Dense density matrices on a truncated multi-mode Fock space.

Tensor index convention: the flat basis index is the row-major (C order)
ravel of the per-mode occupations, in the order of ``modes``.  So for modes
``("a", "b")`` with cutoffs ``(2, 1)`` the basis runs
``|0,0>, |0,1>, |1,0>, |1,1>, |2,0>, |2,1>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument

__all__ = ["TruncatedState", "fock_state", "vacuum", "make_singlet", "from_ket"]

TAIL_TOL = 1e-6


@dataclass(frozen=True)
class TruncatedState:
    """Density matrix over named bosonic modes with per-mode photon cutoffs.

    ``cutoffs[k]`` is the largest photon number kept for ``modes[k]``; the
    matrix has dimension ``prod(cutoff + 1)``.  ``cutoff`` (singular) is the
    largest of them.
    """

    modes: tuple
    cutoffs: tuple
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        modes = tuple(self.modes)
        cutoffs = tuple(int(c) for c in self.cutoffs)
        if len(modes) != len(set(modes)):
            raise InvalidArgument(f"duplicate mode labels in {modes}")
        if len(modes) != len(cutoffs):
            raise InvalidArgument("one cutoff per mode is required")
        if any(c < 1 for c in cutoffs):
            raise InvalidArgument(f"cutoffs must be >= 1, got {cutoffs}")
        m = np.asarray(self.matrix, dtype=complex)
        d = int(np.prod([c + 1 for c in cutoffs]))
        if m.shape != (d, d):
            raise InvalidArgument(f"matrix shape {m.shape} does not match dimension {d}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "cutoffs", cutoffs)
        object.__setattr__(self, "matrix", m)

    # geometry -------------------------------------------------------------

    @property
    def cutoff(self) -> int:
        return max(self.cutoffs)

    @property
    def dims(self) -> tuple:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def index(self, mode) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise InvalidArgument(f"mode {mode!r} not in state modes {self.modes}") from None

    def tensor(self) -> np.ndarray:
        """View with shape ``dims + dims`` (ket axes first, then bra axes)."""
        return self.matrix.reshape(self.dims + self.dims)

    @classmethod
    def from_tensor(cls, modes, cutoffs, tensor) -> "TruncatedState":
        d = int(np.prod([c + 1 for c in cutoffs]))
        return cls(tuple(modes), tuple(cutoffs), np.asarray(tensor).reshape(d, d))

    # checks ---------------------------------------------------------------

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def populations(self, mode) -> np.ndarray:
        """Photon-number distribution of one mode."""
        k = self.index(mode)
        diag = np.real(np.diagonal(self.matrix)).reshape(self.dims)
        other = tuple(i for i in range(len(self.modes)) if i != k)
        return diag.sum(axis=other)

    def tail_mass(self, mode) -> float:
        return float(self.populations(mode)[-1])

    def truncation_valid(self, tol: float = TAIL_TOL) -> bool:
        return all(self.tail_mass(m) <= tol for m in self.modes)

    def validate(self, trace_tol=1e-12, herm_tol=1e-12, psd_tol=1e-10) -> None:
        """Raise ``AssertionError`` if any density-matrix invariant fails."""
        assert abs(self.trace() - 1) <= trace_tol, f"trace {self.trace()!r}"
        assert self.hermiticity_error() <= herm_tol, f"hermiticity {self.hermiticity_error()!r}"
        assert self.min_eigenvalue() >= -psd_tol, f"min eigenvalue {self.min_eigenvalue()!r}"

    # structural helpers ---------------------------------------------------

    def partial_trace(self, keep) -> "TruncatedState":
        keep = [self.index(m) for m in keep]
        n = len(self.modes)
        t = self.tensor()
        drop = [i for i in range(n) if i not in keep]
        # trace dropped modes pairwise, highest axis first so indices stay valid
        for i in sorted(drop, reverse=True):
            cur = t.ndim // 2
            t = np.trace(t, axis1=i, axis2=cur + i)
        # remaining axes are in original order; permute to requested order
        remaining = [i for i in range(n) if i in keep]
        perm = [remaining.index(i) for i in keep]
        r = len(perm)
        t = t.transpose(perm + [r + p for p in perm])
        modes = tuple(self.modes[i] for i in keep)
        cutoffs = tuple(self.cutoffs[i] for i in keep)
        return TruncatedState.from_tensor(modes, cutoffs, t)

    def reorder(self, modes) -> "TruncatedState":
        """Same state with the modes listed in a different order."""
        if sorted(map(str, modes)) != sorted(map(str, self.modes)) or len(modes) != len(self.modes):
            raise InvalidArgument(f"{modes} is not a permutation of {self.modes}")
        return self.partial_trace(modes)

    def with_cutoff(self, mode, cutoff: int) -> "TruncatedState":
        """Embed into (or crop to) a different cutoff for one mode.

        Cropping is only allowed when it discards no population.
        """
        k = self.index(mode)
        old = self.cutoffs[k]
        if cutoff == old:
            return self
        t = self.tensor()
        n = len(self.modes)
        if cutoff > old:
            pad = [(0, 0)] * (2 * n)
            pad[k] = (0, cutoff - old)
            pad[n + k] = (0, cutoff - old)
            t = np.pad(t, pad)
        else:
            lost = self.populations(mode)[cutoff + 1:].sum()
            if lost > 1e-14:
                raise InvalidArgument(f"cropping mode {mode!r} to {cutoff} would discard {lost:.3g}")
            sl = [slice(None)] * (2 * n)
            sl[k] = slice(0, cutoff + 1)
            sl[n + k] = slice(0, cutoff + 1)
            t = t[tuple(sl)]
        cutoffs = list(self.cutoffs)
        cutoffs[k] = cutoff
        return TruncatedState.from_tensor(self.modes, cutoffs, t)

    def tensor_product(self, other: "TruncatedState") -> "TruncatedState":
        return TruncatedState(
            self.modes + other.modes,
            self.cutoffs + other.cutoffs,
            np.kron(self.matrix, other.matrix),
        )


def _flat_index(cutoffs, occupations) -> int:
    dims = [c + 1 for c in cutoffs]
    return int(np.ravel_multi_index(tuple(occupations), dims))


def from_ket(modes, cutoffs, amplitudes: dict) -> TruncatedState:
    """Pure state from ``{occupation tuple: amplitude}``; normalised here."""
    d = int(np.prod([c + 1 for c in cutoffs]))
    psi = np.zeros(d, dtype=complex)
    for occ, amp in amplitudes.items():
        if len(occ) != len(modes):
            raise InvalidArgument(f"occupation {occ} does not match modes {modes}")
        if any(n < 0 or n > c for n, c in zip(occ, cutoffs)):
            raise InvalidArgument(f"occupation {occ} outside cutoffs {cutoffs}")
        psi[_flat_index(cutoffs, occ)] += amp
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise InvalidArgument("zero ket")
    psi /= norm
    return TruncatedState(tuple(modes), tuple(cutoffs), np.outer(psi, psi.conj()))


def fock_state(modes, cutoffs, occupations) -> TruncatedState:
    if isinstance(cutoffs, int):
        cutoffs = (cutoffs,) * len(modes)
    return from_ket(modes, cutoffs, {tuple(occupations): 1.0})


def vacuum(modes, cutoffs) -> TruncatedState:
    if isinstance(cutoffs, int):
        cutoffs = (cutoffs,) * len(modes)
    return fock_state(modes, cutoffs, (0,) * len(modes))


def make_singlet(cutoff: int, modes=("a", "a_perp", "b", "b_perp")) -> TruncatedState:
    """``(a^+ b_perp^+ - a_perp^+ b^+)|0> / sqrt(2)`` on four modes."""
    if not isinstance(cutoff, (int, np.integer)) or cutoff < 1:
        raise InvalidArgument(f"cutoff must be an integer >= 1, got {cutoff!r}")
    return from_ket(
        modes,
        (int(cutoff),) * 4,
        {(1, 0, 0, 1): 1 / np.sqrt(2), (0, 1, 1, 0): -1 / np.sqrt(2)},
    )
