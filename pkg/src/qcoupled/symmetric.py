"""Explicit first moments for the symmetric nearest-neighbour model.

Under symmetry the kernel K vanishes on the diagonal x = y, and the
functional equation restricted to the diagonal,

    Pi_0(x,x) Phi(x) / (x - 1) = q_b x T(x,x) Pi_0(0,0),
    Phi(x) = T(x,x) R(x,x) - x^2,

involves Pi_0(0,0) alone (q_b is the boundary rate straight down). Its
value at x = 1 gives Pi_0(0,0); its first derivative gives the sum of the two
partial derivatives of Pi_0 at (1,1). Everything reduces to T(1,1) and the
first two derivatives of T along the diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernel
from .model import ModelSpec, is_symmetric
from .psa import phase_totals
from .stability import UnstableError


@dataclass(frozen=True)
class SymmetricMoments:
    M1: float
    M2: float
    M: float  # half the total boundary derivative of Pi_0 at (1,1)
    S: float  # Phi''(1)
    rho: float
    pi0_origin: float
    T11: float
    T1: float  # d/dx T(x,1) at 1
    T_diag1: float  # d/dx T(x,x) at 1
    T_diag2: float  # d^2/dx^2 T(x,x) at 1
    M_diagonal: float  # M from a direct contour expansion of the diagonal equation
    M_printed: float  # uncorrected closed forms, kept for comparison
    S_printed: float

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def _t(spec, x, y):
    return 1.0 / kernel.t_inv_raw(spec, x, y)


def symmetric_moments(spec: ModelSpec) -> SymmetricMoments:
    """Mean levels E(X1), E(X2) of a symmetric model at w = 1/2.

    M is exact for the average of the two boundary derivatives; when the
    failed-mode arrival rates are not symmetric the split between M1 and
    M2 is only approximate (their sum stays exact).
    """
    if not is_symmetric(spec):
        raise ValueError("model is not symmetric")
    if not spec.is_qbd():
        raise ValueError("explicit moments are restricted to nearest-neighbour increments")
    if spec.n_phases < 1:
        raise ValueError("explicit moments need at least one modulating phase")
    inner = spec.interior
    q_w = inner.get((-1, 0), 0.0)
    q_e = inner.get((1, 0), 0.0)
    q_ne = inner.get((1, 1), 0.0)
    q_b = spec.q1_left().get(0, 0.0)
    Nth = spec.n_phases * float(spec.theta[0, 1])

    T = float(np.real(_t(spec, 1.0, 1.0)))
    T1 = float(np.real(kernel.contour_derivative(lambda x: _t(spec, x, 1.0), 1.0, 1)))
    Td1 = float(np.real(kernel.contour_derivative(lambda x: _t(spec, x, x), 1.0, 1)))
    Td2 = float(np.real(kernel.contour_derivative(lambda x: _t(spec, x, x), 1.0, 2)))

    totals = phase_totals(spec)
    p11 = 1.0 / totals.norm

    # Phi'(1) / 2; positivity is the ergodicity condition
    half_slope = Nth * (0.5 * Td1 + T) + T * (q_w - q_e - q_ne) - 1.0
    rho = T * (q_e + q_ne) / (T * (Nth + q_w) + 0.5 * Nth * Td1 - 1.0)
    if not (rho < 1 and half_slope > 0):
        raise UnstableError(f"unstable: symmetric load {rho:.6g} >= 1")
    pi00 = 2.0 * p11 * half_slope / (T * q_b)
    S = 4.0 * Td1 * (Nth + q_w - q_e - q_ne) + 2.0 * T * (Nth + 2 * q_w - 4 * q_e - 5 * q_ne) + Nth * Td2 - 2.0
    total = (pi00 * q_b * (Td1 + T) - 0.5 * S * p11) / (2.0 * half_slope)
    M = 0.5 * total

    S_printed = 2.0 * (2.0 * T1 * (Nth + q_w - q_e - q_ne) + T * (Nth + 2 * q_w - 4 * q_e - 5 * q_ne)) + Nth * Td2
    printed_den = 2.0 * (Nth * (T1 + T) + T * (q_w - q_e - q_ne) - 1.0)
    M_printed = (pi00 * q_b * (2.0 * T1 + T) + 0.5 * S_printed * p11) / printed_den

    M1 = float(p11 * totals.dFx.sum() + M * totals.norm)
    M2 = float(p11 * totals.dFy.sum() + M * totals.norm)
    return SymmetricMoments(
        M1, M2, M, S, rho, pi00, T, T1, Td1, Td2,
        _diagonal_slope(spec, q_b, p11), M_printed, S_printed,
    )


def _diagonal_slope(spec: ModelSpec, q_b: float, p11: float) -> float:
    """Half of d/dx Pi_0(x,x) at 1 by contour differentiation.

    Uses Pi_0(x,x) = q_b x (x-1) Pi_0(0,0) / (R - x^2/T), which needs no
    derivative formulas at all.
    """

    def phi(x):
        return kernel.rkc_raw(spec, x, x)[0] - x * x * kernel.t_inv_raw(spec, x, x)

    pi00 = p11 * float(np.real(kernel.contour_derivative(phi, 1.0, 1))) / q_b
    slope = kernel.contour_derivative(lambda x: q_b * x * (x - 1.0) / phi(x), 1.0, 1)
    return 0.5 * float(np.real(slope)) * pi00
