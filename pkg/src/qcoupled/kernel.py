"""Generating-function kernels of the modulated random walk.

All ``*_raw`` evaluators are vectorised over broadcastable arrays of ``x`` and
``y`` and perform no domain checks; the public wrappers reject points outside
the closed unit bidisc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import ModelSpec, RateField

BIDISC_TOL = 1e-9
T_DENOM_MIN = 1e-14


class KernelError(ArithmeticError):
    """Numerical failure while evaluating a kernel object."""


def field_poly(f: RateField, x, y):
    """Evaluate sum of rate * x**dx * y**dy over a finite increment map."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
    for (dx, dy), r in f.items():
        if r:
            out = out + r * x**dx * y**dy
    return out


def _check_bidisc(x, y):
    if np.any(np.abs(x) > 1 + BIDISC_TOL) or np.any(np.abs(y) > 1 + BIDISC_TOL):
        raise ValueError("evaluation point outside the closed unit bidisc")


def _s_k(spec: ModelSpec, k: int, x, y):
    f = spec.phase_field(k)
    total = sum(r for d, r in f.items() if d != (0, 0))
    return total - field_poly({d: r for d, r in f.items() if d != (0, 0)}, x, y)


def d_k_raw(spec: ModelSpec, k: int, x, y):
    """D_k(x, y) = S_k(x, y) + theta_{k,.}."""
    return _s_k(spec, k, x, y) + spec.switch.out_rate(k)


def _a1(spec, x, y):
    # y * sum_j q1_{-1,j} (x - y^j)
    q1 = spec.q1_left()
    return y * sum(r * (x - y**j) for j, r in q1.items()) if q1 else 0 * x * y


def _b2_over_x(spec, x, y):
    # sum_i q2_{i,-1} (y - x^i)
    q2 = spec.q2_down()
    return sum(r * (y - x**i) for i, r in q2.items()) if q2 else 0 * x * y


def rkc_raw(spec: ModelSpec, x, y):
    """Return R, K and both algebraic forms of C."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    w = spec.w
    inner = spec.interior
    left = sum((r * (x - y**d[1]) for d, r in inner.items() if d[0] == -1), 0 * x * y)
    down = sum((r * (y - x**d[0]) for d, r in inner.items() if d[1] == -1), 0 * x * y)
    R = x * y * d_k_raw(spec, 0, x, y) + y * left + x * down
    A1 = _a1(spec, x, y)
    B2 = x * _b2_over_x(spec, x, y)
    K = B2 - A1
    C1 = w * K + A1
    C2 = -(1.0 - w) * K + B2
    return R, K, C1, C2


def a_jk_raw(spec: ModelSpec, j: int, k: int, x, y):
    return field_poly(spec.switch.jump(j, k), x, y)


def phase_solve_raw(spec: ModelSpec, x, y, with_det: bool = False):
    """Solve L(x,y)^T P = E(x,y) pointwise.

    Returns ``(F, t_inv, det)`` where ``F[..., k-1] = F_{0,k}`` and
    ``t_inv = sum_k theta_{k,0} A_{k,0} F_{0,k} = 1 / T``. For N = 0 the
    phase system is empty and ``t_inv`` is identically zero. ``det`` is only
    computed on request (``None`` otherwise).
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    shape = np.broadcast(x, y).shape
    N = spec.n_phases
    theta = spec.theta
    if N == 0:
        return np.zeros(shape + (0,), complex), np.zeros(shape, complex), np.ones(shape, complex)
    LT = np.zeros(shape + (N, N), dtype=complex)
    E = np.zeros(shape + (N,), dtype=complex)
    for k in range(1, N + 1):
        LT[..., k - 1, k - 1] = d_k_raw(spec, k, x, y)
        E[..., k - 1] = theta[0, k] * a_jk_raw(spec, 0, k, x, y) if theta[0, k] else 0.0
        for m in range(1, N + 1):
            if m != k and theta[m, k]:
                LT[..., k - 1, m - 1] = -theta[m, k] * a_jk_raw(spec, m, k, x, y)
    F = np.linalg.solve(LT, E[..., None])[..., 0]
    det = np.linalg.det(LT) if with_det else None
    t_inv = np.zeros(shape, dtype=complex)
    for k in range(1, N + 1):
        if theta[k, 0]:
            t_inv = t_inv + theta[k, 0] * a_jk_raw(spec, k, 0, x, y) * F[..., k - 1]
    return F, t_inv, det


def t_inv_raw(spec: ModelSpec, x, y):
    return phase_solve_raw(spec, x, y)[1]


def psa_kernels_scaled_raw(spec: ModelSpec, x, y):
    """G, G10, G00 multiplied by 1/T (finite also for N = 0)."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    t_inv = t_inv_raw(spec, x, y)
    b2x = _b2_over_x(spec, x, y)
    q1 = spec.q1_left()
    tail = sum((r * (1 - y**j / x) for j, r in q1.items()), 0 * x * y)
    g = y * d_k_raw(spec, 0, x, y) + b2x - y * t_inv
    g10 = b2x - y * tail
    g00 = y * tail
    return g, g10, g00


def psa_kernels_raw(spec: ModelSpec, x, y):
    """G, G10, G00 with the T factor (T := 1 when there is no modulation)."""
    g, g10, g00 = psa_kernels_scaled_raw(spec, x, y)
    if spec.n_phases == 0:
        return g, g10, g00
    T = 1.0 / t_inv_raw(spec, x, y)
    return T * g, T * g10, T * g00


# -- public API -----------------------------------------------------------

@dataclass(frozen=True)
class KernelValues:
    R: complex
    K: complex
    C: complex
    Dk: np.ndarray


@dataclass(frozen=True)
class PhaseSolve:
    F: np.ndarray
    T: complex
    detL: complex


def eval_rkc(spec: ModelSpec, x: complex, y: complex) -> KernelValues:
    _check_bidisc(x, y)
    R, K, C1, C2 = rkc_raw(spec, x, y)
    if abs(C1 - C2) > 1e-12 * max(1.0, abs(C1)):
        raise KernelError(f"inconsistent C forms: {C1} vs {C2}")
    Dk = np.array([complex(d_k_raw(spec, k, x, y)) for k in range(spec.n_phases + 1)])
    return KernelValues(complex(R), complex(K), complex(C1), Dk)


def eval_phase_solve(spec: ModelSpec, x: complex, y: complex) -> PhaseSolve:
    if spec.n_phases < 1:
        raise ValueError("phase solve requires at least one modulating phase")
    _check_bidisc(x, y)
    F, t_inv, det = phase_solve_raw(spec, x, y, with_det=True)
    scale = max(1.0, float(np.max(np.abs(spec.theta))))
    if abs(det) < 1e-300 or not np.all(np.isfinite(F)):
        raise KernelError(f"singular phase system, |det L| = {abs(det):.3e}")
    if abs(t_inv) < T_DENOM_MIN * scale:
        raise KernelError(f"T denominator {abs(t_inv):.3e} below threshold")
    return PhaseSolve(np.asarray(F, complex), complex(1.0 / t_inv), complex(det))


def eval_psa_kernels(spec: ModelSpec, x: complex, y: complex) -> tuple[complex, complex, complex]:
    if x == 0:
        raise ValueError("G10 and G00 have a pole at x = 0")
    _check_bidisc(x, y)
    if spec.n_phases >= 1:
        eval_phase_solve(spec, x, y)
    g, g10, g00 = psa_kernels_raw(spec, x, y)
    return complex(g), complex(g10), complex(g00)


def phase_probabilities_raw(spec: ModelSpec) -> np.ndarray:
    F = np.real(phase_solve_raw(spec, 1.0, 1.0)[0])
    p0 = 1.0 / (1.0 + F.sum())
    return np.concatenate([[p0], p0 * F])


# -- contour derivatives --------------------------------------------------

def _call_vectorised(f: Callable, z: np.ndarray) -> np.ndarray:
    try:
        v = np.asarray(f(z), dtype=complex)
        if v.shape == z.shape:
            return v
    except (TypeError, ValueError):
        pass
    return np.array([complex(f(zi)) for zi in z])


def contour_derivative(
    f: Callable,
    center: complex,
    order: int,
    radius: float = 1e-2,
    nodes: int = 64,
    max_nodes: int = 4096,
) -> complex:
    """order-th derivative of an analytic ``f`` by the trapezoidal Cauchy integral.

    The node count is doubled until two successive estimates agree to 1e-9
    relative (or to the round-off floor of the integrand).
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    n = max(int(nodes), 2 * order + 2)
    scale = math.factorial(order) / radius**order

    def estimate(n):
        k = np.arange(n)
        ph = np.exp(2j * np.pi * k / n)
        vals = _call_vectorised(f, center + radius * ph)
        return scale * np.mean(vals * ph ** (-order)), np.max(np.abs(vals))

    prev, fmax = estimate(n)
    while True:
        n *= 2
        cur, fmax = estimate(n)
        diff = abs(cur - prev)
        floor = 1e-13 * scale * fmax
        if diff <= 1e-9 * abs(cur) or diff <= floor:
            return complex(cur)
        if n >= max_nodes:
            if diff <= 1e-6 * max(abs(cur), floor):
                return complex(cur)
            raise KernelError(f"contour quadrature not converged (change {diff:.3e})")
        prev = cur
