r"""Truncated power series ("jets") in one or two variables.

A :class:`Series` stores the Taylor coefficients ``c[i, j]`` of a function
around the origin, truncated at ``order`` in every variable.  Arithmetic on
series is exact up to that order, which is what lets the analyzer extract
7th order mixed derivatives of the detector generating functions without
symbolic algebra or finite differences.

Two concrete flavours exist: :class:`UniSeries` in ``z`` and
:class:`BiSeries` in ``(z, z_perp)``.  Mixing them raises ``TypeError``.
"""

from __future__ import annotations

import math
from numbers import Real

import numpy as np
from scipy.signal import convolve

from .errors import InvalidArgument, SeriesDomainError

__all__ = [
    "Series",
    "UniSeries",
    "BiSeries",
    "series_affine",
    "series_pow",
    "derivative_at_zero",
    "divide_by_one_minus",
    "pi_eta",
]


class Series:
    """Truncated real power series around the origin.

    Instances are immutable: every operation returns a new series.

    Parameters
    ----------
    coeffs : array_like
        Coefficient array of shape ``(order + 1,) * ndim``.
    """

    ndim: int = 0

    __array_priority__ = 100  # keep numpy scalars from broadcasting over us

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.ndim != self.ndim:
            raise InvalidArgument(
                f"{type(self).__name__} needs a {self.ndim}-d coefficient array, got {c.ndim}-d"
            )
        if len(set(c.shape)) != 1 or c.shape[0] < 1:
            raise InvalidArgument(f"coefficient array must be a non-empty hypercube, got {c.shape}")
        c.setflags(write=False)
        self._c = c

    # construction ---------------------------------------------------------

    @classmethod
    def constant(cls, value: float, order: int) -> "Series":
        c = np.zeros((order + 1,) * cls.ndim)
        c[(0,) * cls.ndim] = value
        return cls(c)

    @classmethod
    def variable(cls, order: int, axis: int = 0) -> "Series":
        """The series of the coordinate ``axis`` itself (``z`` or ``z_perp``)."""
        if not 0 <= axis < cls.ndim:
            raise InvalidArgument(f"axis {axis} out of range for {cls.__name__}")
        c = np.zeros((order + 1,) * cls.ndim)
        if order >= 1:
            idx = [0] * cls.ndim
            idx[axis] = 1
            c[tuple(idx)] = 1.0
        return cls(c)

    # basic accessors ------------------------------------------------------

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def order(self) -> int:
        return self._c.shape[0] - 1

    @property
    def constant_term(self) -> float:
        return float(self._c[(0,) * self.ndim])

    def coefficient(self, *index: int) -> float:
        if len(index) != self.ndim:
            raise InvalidArgument(f"need {self.ndim} indices, got {len(index)}")
        if any(i < 0 or i > self.order for i in index):
            raise InvalidArgument(f"index {index} beyond truncation order {self.order}")
        return float(self._c[index])

    def __repr__(self):
        return f"{type(self).__name__}(order={self.order}, coeffs={self._c.tolist()!r})"

    # arithmetic -----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Series):
            if type(other) is not type(self):
                raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
            if other.order != self.order:
                raise InvalidArgument(f"order mismatch: {self.order} vs {other.order}")
            return other
        if isinstance(other, (Real, np.floating, np.integer)):
            return type(self).constant(float(other), self.order)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return type(self)(self._c + other._c)

    __radd__ = __add__

    def __neg__(self):
        return type(self)(-self._c)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return type(self)(self._c - other._c)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return type(self)(other._c - self._c)

    def __mul__(self, other):
        if isinstance(other, (Real, np.floating, np.integer)):
            return type(self)(self._c * float(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = self.order + 1
        full = convolve(self._c, other._c, method="direct")
        return type(self)(full[(slice(0, n),) * self.ndim])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (Real, np.floating, np.integer)):
            return type(self)(self._c / float(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.reciprocal()

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = type(self).constant(1.0, self.order)
            base = self
            k = int(p)
            while k:
                if k & 1:
                    out = out * base
                base = base * base
                k >>= 1
            return out
        return self.pow(float(p))

    # composition ----------------------------------------------------------

    def compose(self, taylor) -> "Series":
        """Evaluate ``F(self)`` from the Taylor coefficients of ``F``.

        ``taylor[k]`` must be ``F^{(k)}(s0) / k!`` where ``s0`` is the
        constant term of ``self``.  Coefficients past the total degree that
        fits in the truncation are ignored.
        """
        kmax = self.ndim * self.order
        taylor = list(taylor)[: kmax + 1]
        t = self - self.constant_term  # nilpotent part
        out = type(self).constant(0.0, self.order)
        for c in reversed(taylor):
            out = out * t + c
        return out

    def exp(self) -> "Series":
        s0 = self.constant_term
        kmax = self.ndim * self.order
        e0 = math.exp(s0)
        return self.compose([e0 / math.factorial(k) for k in range(kmax + 1)])

    def pow(self, p: float) -> "Series":
        """Real power; requires a positive constant term."""
        s0 = self.constant_term
        if not s0 > 0:
            raise SeriesDomainError(f"real power needs a positive constant term, got {s0!r}")
        kmax = self.ndim * self.order
        # generalized binomial by recurrence (stays finite for negative integer p)
        taylor = [s0**p]
        for k in range(1, kmax + 1):
            taylor.append(taylor[-1] * (p - k + 1) / (k * s0))
        return self.compose(taylor)

    def reciprocal(self) -> "Series":
        s0 = self.constant_term
        if s0 == 0:
            raise SeriesDomainError("reciprocal needs a nonzero constant term")
        kmax = self.ndim * self.order
        return self.compose([(-1) ** k * s0 ** (-k - 1) for k in range(kmax + 1)])

    # extraction -----------------------------------------------------------

    def derivative_at_zero(self, *orders: int) -> float:
        """Mixed partial derivative at the origin, ``prod(k!) * c[k...]``."""
        c = self.coefficient(*orders)
        return c * math.prod(math.factorial(k) for k in orders)

    def divide_by_one_minus(self, axis: int = 0) -> "Series":
        """``self / (1 - x_axis)``: cumulative sums along ``axis``."""
        if not 0 <= axis < self.ndim:
            raise InvalidArgument(f"axis {axis} out of range for {type(self).__name__}")
        return type(self)(np.cumsum(self._c, axis=axis))

    def evaluate(self, *point: float) -> float:
        """Evaluate the truncated polynomial (mainly for tests)."""
        if len(point) != self.ndim:
            raise InvalidArgument(f"need {self.ndim} coordinates")
        n = self.order + 1
        powers = [np.asarray(x, dtype=float) ** np.arange(n) for x in point]
        out = self._c
        for p in reversed(powers):
            out = out @ p
        return float(out)


class UniSeries(Series):
    """Truncated series in a single variable ``z``."""

    ndim = 1


class BiSeries(Series):
    """Truncated series in ``(z, z_perp)``; axis 0 is ``z``, axis 1 is ``z_perp``."""

    ndim = 2

    def restrict(self, axis: int) -> UniSeries:
        """Set the *other* variable to zero, keeping a series in ``axis``."""
        return UniSeries(self._c[:, 0] if axis == 0 else self._c[0, :])


def series_affine(eta: float, order: int) -> UniSeries:
    """``eta * z + (1 - eta)``, the loss-thinned counting variable."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgument(f"eta must lie in [0, 1], got {eta!r}")
    return pi_eta(eta, UniSeries.variable(order))


def pi_eta(eta: float, z: Series) -> Series:
    """Apply ``z -> eta z + 1 - eta`` to an arbitrary series argument."""
    return z * eta + (1.0 - eta)


def series_pow(s: Series, p: float) -> Series:
    return s.pow(p) if not (isinstance(p, int) and p >= 0) else s**p


def derivative_at_zero(s: Series, i: int, j: int | None = None) -> float:
    if isinstance(s, UniSeries):
        if j not in (None, 0):
            raise InvalidArgument("a UniSeries has no second variable")
        return s.derivative_at_zero(i)
    return s.derivative_at_zero(i, 0 if j is None else j)


def divide_by_one_minus(s: Series, variable: int = 0) -> Series:
    return s.divide_by_one_minus(variable)
