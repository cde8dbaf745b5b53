"""Ladder operators on truncated Fock spaces (single mode and embedded)."""

from __future__ import annotations

from functools import reduce

import numpy as np
import scipy.sparse as sp

from ..errors import InvalidArgument

__all__ = ["destroy", "create", "number", "ModeOperators"]


def destroy(cutoff: int) -> np.ndarray:
    """Annihilation operator on ``span{|0>, ..., |cutoff>}``; exact matrix elements."""
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1)


def create(cutoff: int) -> np.ndarray:
    return destroy(cutoff).T.copy()


def number(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff + 1, dtype=float))


class ModeOperators:
    """Sparse operators on the full space of a multi-mode truncated state.

    >>> ops = ModeOperators(("a", "b"), (3, 1))
    >>> ops.n("a").shape
    (8, 8)
    """

    def __init__(self, modes, cutoffs):
        self.modes = tuple(modes)
        self.cutoffs = tuple(cutoffs)
        self.dims = tuple(c + 1 for c in self.cutoffs)

    @classmethod
    def for_state(cls, state) -> "ModeOperators":
        return cls(state.modes, state.cutoffs)

    def _embed(self, mode, single: np.ndarray) -> sp.csr_matrix:
        try:
            k = self.modes.index(mode)
        except ValueError:
            raise InvalidArgument(f"unknown mode {mode!r}") from None
        factors = [sp.identity(d, format="csr") for d in self.dims]
        factors[k] = sp.csr_matrix(single)
        return reduce(lambda x, y: sp.kron(x, y, format="csr"), factors)

    def _cut(self, mode) -> int:
        return self.cutoffs[self.modes.index(mode)]

    def identity(self) -> sp.csr_matrix:
        return sp.identity(int(np.prod(self.dims)), format="csr", dtype=complex)

    def a(self, mode) -> sp.csr_matrix:
        return self._embed(mode, destroy(self._cut(mode)))

    def adag(self, mode) -> sp.csr_matrix:
        return self._embed(mode, create(self._cut(mode)))

    def n(self, mode) -> sp.csr_matrix:
        return self._embed(mode, number(self._cut(mode)))

    def proj(self, mode, k: int) -> sp.csr_matrix:
        c = self._cut(mode)
        if not 0 <= k <= c:
            raise InvalidArgument(f"Fock level {k} outside cutoff {c}")
        p = np.zeros((c + 1, c + 1))
        p[k, k] = 1.0
        return self._embed(mode, p)

    def stokes(self, mode, mode_perp):
        """``(J_x, J_y, J_z)`` for the polarization pair ``(mode, mode_perp)``."""
        a, ap = self.a(mode), self.a(mode_perp)
        ad, apd = self.adag(mode), self.adag(mode_perp)
        jx = ad @ ap + apd @ a
        jy = -1j * (ad @ ap - apd @ a)
        jz = self.n(mode) - self.n(mode_perp)
        return jx, jy, jz
