"""Matrix-valued parameter families with derivative tracking.

A family is a broadcasting sampler R^p -> C^{n x n} together with optional
analytic partial derivatives.  Algebraic combinations (products, inverses,
sums) propagate derivatives by the chain rule so that downstream consumers
(star products, curvature integrands) do not accumulate finite-difference
noise.  When no analytic derivative is available a 4th-order central
difference with step h = 1e-4 * (1 + |x|) is used.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

__all__ = ["SuspendedFamily", "constant_family", "identity_family"]

Sampler = Callable[..., np.ndarray]

_FD_STEP = 1e-4
_FD_WEIGHTS = (1.0, -8.0, 8.0, -1.0)
_FD_OFFSETS = (-2.0, -1.0, 1.0, 2.0)


class SuspendedFamily:
    """A p-parameter family of n x n matrices, Id + (decaying perturbation)
    when used as a group element.

    ``sampler`` must broadcast: given p arrays of common shape S it returns an
    array of shape S + (n, n).  ``derivatives`` maps axis index to an analytic
    partial-derivative sampler.
    """

    def __init__(
        self,
        sampler: Sampler,
        size: int,
        arity: int = 1,
        decay_order: float = -2.0,
        derivatives: dict[int, Sampler] | None = None,
        at_infinity: np.ndarray | None = None,
    ):
        if arity not in (1, 2, 3):
            raise ValueError("arity must be 1, 2 or 3")
        self.sampler = sampler
        self.size = size
        self.arity = arity
        self.decay_order = decay_order
        self.derivatives = dict(derivatives or {})
        self.at_infinity = (
            np.eye(size, dtype=complex) if at_infinity is None else np.asarray(at_infinity)
        )

    # -- evaluation ---------------------------------------------------------

    def __call__(self, *args) -> np.ndarray:
        arrays = [np.asarray(a, dtype=float) for a in args]
        if len(arrays) != self.arity:
            raise ValueError(f"family takes {self.arity} parameters, got {len(arrays)}")
        return np.asarray(self.sampler(*arrays), dtype=complex)

    def d(self, axis: int) -> "SuspendedFamily":
        """Partial derivative along ``axis`` as a new family."""
        if axis in self.derivatives:
            return SuspendedFamily(
                self.derivatives[axis],
                self.size,
                self.arity,
                decay_order=self.decay_order - 1,
                at_infinity=np.zeros((self.size, self.size), dtype=complex),
            )
        return SuspendedFamily(
            _fd_sampler(self.sampler, axis),
            self.size,
            self.arity,
            decay_order=self.decay_order - 1,
            at_infinity=np.zeros((self.size, self.size), dtype=complex),
        )

    # -- algebra ------------------------------------------------------------

    def matmul(self, other: "SuspendedFamily") -> "SuspendedFamily":
        if other.size != self.size or other.arity != self.arity:
            raise ValueError("family size/arity mismatch")
        a, b = self, other

        def sampler(*args):
            return a(*args) @ b(*args)

        derivs = {
            axis: _product_rule(a, b, axis) for axis in range(self.arity)
        }
        return SuspendedFamily(
            sampler,
            self.size,
            self.arity,
            decay_order=max(a.decay_order, b.decay_order),
            derivatives=derivs,
            at_infinity=a.at_infinity @ b.at_infinity,
        )

    def inv(self) -> "SuspendedFamily":
        a = self

        def sampler(*args):
            return np.linalg.inv(a(*args))

        fam = SuspendedFamily(
            sampler,
            self.size,
            self.arity,
            decay_order=self.decay_order,
            at_infinity=np.linalg.inv(self.at_infinity),
        )
        for axis in range(self.arity):
            fam.derivatives[axis] = _inverse_rule(a, axis)
        return fam

    def add(self, other: "SuspendedFamily", coeff: complex = 1.0) -> "SuspendedFamily":
        a, b = self, other

        def sampler(*args):
            return a(*args) + coeff * b(*args)

        derivs = {}
        for axis in range(self.arity):
            da, db = a.d(axis), b.d(axis)
            derivs[axis] = _linear_comb(da, db, coeff)
        return SuspendedFamily(
            sampler,
            self.size,
            self.arity,
            decay_order=max(a.decay_order, b.decay_order),
            derivatives=derivs,
            at_infinity=a.at_infinity + coeff * b.at_infinity,
        )

    def scaled(self, factor: complex) -> "SuspendedFamily":
        a = self

        def sampler(*args):
            return factor * a(*args)

        derivs = {
            axis: (lambda ax: (lambda *args: factor * a.d(ax)(*args)))(axis)
            for axis in range(self.arity)
        }
        return SuspendedFamily(
            sampler,
            self.size,
            self.arity,
            decay_order=self.decay_order,
            derivatives=derivs,
            at_infinity=factor * self.at_infinity,
        )

    # -- probes -------------------------------------------------------------

    def sample_grid(self, *axes: np.ndarray) -> np.ndarray:
        """Evaluate on a tensor grid, shape (len(ax_1), ..., n, n)."""
        if self.arity == 1:
            return self(axes[0])
        if self.arity == 2:
            return self(axes[0][:, None], axes[1][None, :])
        return self(
            axes[0][:, None, None], axes[1][None, :, None], axes[2][None, None, :]
        )

    def check_group_decay(self, radii: Sequence[float] = (8.0, 16.0, 32.0)) -> bool:
        """Heuristic check of |A(t) - A(inf)| <= C (1+|t|)^decay_order."""
        if self.arity != 1:
            radii = radii[:2]
        ref = None
        for r in radii:
            pts = [np.array([r, -r])] * self.arity
            dev = float(np.max(np.abs(self.sample_grid(*pts) - self.at_infinity)))
            bound = (1 + r) ** self.decay_order
            if ref is None:
                ref = max(dev / bound, 1e-30)
            elif dev > 10.0 * ref * bound:
                return False
        return True


def _fd_sampler(sampler: Sampler, axis: int) -> Sampler:
    def d_sampler(*args):
        args = [np.asarray(a, dtype=float) for a in args]
        x = args[axis]
        h = _FD_STEP * (1.0 + np.abs(x))
        total = None
        for wgt, off in zip(_FD_WEIGHTS, _FD_OFFSETS):
            shifted = list(args)
            shifted[axis] = x + off * h
            term = wgt * np.asarray(sampler(*shifted), dtype=complex)
            total = term if total is None else total + term
        return total / (12.0 * h[..., None, None])

    return d_sampler


def _product_rule(a: SuspendedFamily, b: SuspendedFamily, axis: int) -> Sampler:
    def sampler(*args):
        return a.d(axis)(*args) @ b(*args) + a(*args) @ b.d(axis)(*args)

    return sampler


def _inverse_rule(a: SuspendedFamily, axis: int) -> Sampler:
    def sampler(*args):
        inv = np.linalg.inv(a(*args))
        return -inv @ a.d(axis)(*args) @ inv

    return sampler


def _linear_comb(da: SuspendedFamily, db: SuspendedFamily, coeff: complex) -> Sampler:
    def sampler(*args):
        return da(*args) + coeff * db(*args)

    return sampler


def constant_family(matrix: np.ndarray, arity: int = 1, decay_order: float = -2.0) -> SuspendedFamily:
    matrix = np.asarray(matrix, dtype=complex)
    n = matrix.shape[0]

    def sampler(*args):
        shape = np.broadcast(*args).shape if args else ()
        return np.broadcast_to(matrix, shape + (n, n)).copy()

    zero = np.zeros((n, n), dtype=complex)
    derivs = {
        axis: (lambda *args: np.broadcast_to(zero, np.broadcast(*args).shape + (n, n)).copy())
        for axis in range(arity)
    }
    return SuspendedFamily(
        sampler, n, arity, decay_order=decay_order, derivatives=derivs, at_infinity=matrix
    )


def identity_family(n: int, arity: int = 1) -> SuspendedFamily:
    return constant_family(np.eye(n, dtype=complex), arity=arity)
