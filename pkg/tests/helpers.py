"""Shared test oracles: dense operator assembly and a scalar PinT problem."""

from __future__ import annotations

import numpy as np

from pintswe import dynamics
from pintswe.dynamics import PrognosticState
from pintswe.spharm import SphereGrid


class RealStateCodec:
    """Real parametrization of valid prognostic states on one grid.

    The pseudospectral operators are only R-linear (synthesis drops the
    imaginary parts of m = 0 modes), so dense matrices must be assembled
    over the real coordinates: m = 0 coefficients contribute one real each,
    m > 0 coefficients a (re, im) pair, for each of the three fields.
    """

    def __init__(self, grid: SphereGrid, phibar: float):
        self.grid = grid
        self.phibar = phibar
        self.m0 = grid.M + 1
        self.nms = grid.n_modes - self.m0
        self.field_dim = self.m0 + 2 * self.nms
        self.dim = 3 * self.field_dim

    def field_to_real(self, c):
        return np.concatenate([c[:self.m0].real, c[self.m0:].real,
                               c[self.m0:].imag])

    def real_to_field(self, y):
        c = np.zeros(self.grid.n_modes, dtype=complex)
        c[:self.m0] = y[:self.m0]
        c[self.m0:] = (y[self.m0:self.m0 + self.nms]
                       + 1j * y[self.m0 + self.nms:])
        return c

    def pack(self, state: PrognosticState) -> np.ndarray:
        return np.concatenate([self.field_to_real(state.phi),
                               self.field_to_real(state.xi),
                               self.field_to_real(state.delta)])

    def unpack(self, y: np.ndarray) -> PrognosticState:
        k = self.field_dim
        return PrognosticState(self.grid, self.real_to_field(y[:k]),
                               self.real_to_field(y[k:2 * k]),
                               self.real_to_field(y[2 * k:]), self.phibar)

    def random_state(self, rng, scales=(1.0, 1.0, 1.0)) -> PrognosticState:
        y = rng.standard_normal(self.dim)
        k = self.field_dim
        y[:k] *= scales[0]
        y[k:2 * k] *= scales[1]
        y[2 * k:] *= scales[2]
        return self.unpack(y)

    def dense_operator(self, apply_state) -> np.ndarray:
        """Assemble the matrix of a state->tendency map over the real basis."""
        mat = np.zeros((self.dim, self.dim))
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = 1.0
            t = apply_state(self.unpack(e))
            mat[:, j] = np.concatenate([self.field_to_real(t.phi),
                                        self.field_to_real(t.xi),
                                        self.field_to_real(t.delta)])
        return mat

    def dense_linear_operator(self) -> np.ndarray:
        return self.dense_operator(dynamics.linear_combined)


class ScalarProblem:
    """Linear scalar ODE embedded in the PinT engine (1-mode system).

    One step on level l multiplies the state by factors[l]; restriction and
    prolongation are the identity.
    """

    def __init__(self, factors):
        self.factors = list(factors)
        self.step_calls = 0

    def step(self, level, value, prev=None):
        self.step_calls += 1
        return self.factors[level] * value

    def restrict(self, level, value):
        return value

    def prolong(self, level, value):
        return value

    def copy(self, value):
        return value

    def max_abs(self, value):
        return abs(value)

    def is_finite(self, value):
        return bool(np.isfinite(value))

    def tracks_history(self, level):
        return False


def state_rel_diff(a: PrognosticState, b: PrognosticState) -> float:
    """Max over fields of the relative sup-norm difference."""
    out = 0.0
    for fa, fb in ((a.phi, b.phi), (a.xi, b.xi), (a.delta, b.delta)):
        scale = max(np.abs(fb).max(), 1e-300)
        out = max(out, np.abs(fa - fb).max() / scale)
    return out


def states_bitwise_equal(a: PrognosticState, b: PrognosticState) -> bool:
    return (np.array_equal(a.phi, b.phi) and np.array_equal(a.xi, b.xi)
            and np.array_equal(a.delta, b.delta))
