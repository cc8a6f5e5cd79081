"""Ergodicity, phase probabilities and the kernel-zero curves."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernel
from .model import ModelSpec, NetworkParams

FIXED_POINT_ITERS = 500
LIMIT_EPS = (1e-2, 5e-3, 2.5e-3)
LIMIT_SPREAD = 1e-4


class UnstableError(ArithmeticError):
    """The model is not ergodic."""


class ConvergenceError(ArithmeticError):
    pass


# -- s(y): zero of K(., y) ---------------------------------------------------

def _k_raw(spec: ModelSpec, x, y):
    # K = B2 - A1 is w-free
    return x * kernel._b2_over_x(spec, x, y) - kernel._a1(spec, x, y)


def _w_map(spec: ModelSpec, x, y):
    q1, q2 = spec.q1_left(), spec.q2_down()
    num = y * (x * sum(q2.values()) + sum(r * y**j for j, r in q1.items()))
    den = sum(r * x**i for i, r in q2.items()) + y * sum(q1.values())
    return num / den


def s_prime_at_one(spec: ModelSpec) -> float:
    """ds/dy at y = 1 from the boundary departure rates."""
    q1, q2 = spec.q1_left(), spec.q2_down()
    num = sum(q2.values()) + sum(j * r for j, r in q1.items())
    den = sum(i * r for i, r in q2.items()) + sum(q1.values())
    return num / den


def solve_s(spec: ModelSpec, y: complex, seed: complex = 1.0, damping: float = 0.5, reach: float = 0.1) -> complex:
    """Zero x = s(y) of K(., y) reached from ``seed``.

    Damped fixed-point iteration on x = W(x, y) first, Newton on K second.
    A fixed point farther than ``reach`` from the seed belongs to another
    branch and is rejected in favour of Newton.
    """
    x = complex(seed)
    for _ in range(FIXED_POINT_ITERS):
        nxt = (1 - damping) * x + damping * complex(_w_map(spec, x, y))
        if abs(nxt - x) < 1e-15:
            x = nxt
            break
        x = nxt
    if abs(_k_raw(spec, x, y)) < 1e-12 and abs(x - seed) <= reach:
        return x
    x = complex(seed)
    h = 1e-7
    for _ in range(FIXED_POINT_ITERS):
        f = _k_raw(spec, x, y)
        df = (_k_raw(spec, x + h, y) - _k_raw(spec, x - h, y)) / (2 * h)
        step = f / df
        x -= step
        if abs(step) < 1e-15 * max(1.0, abs(x)):
            break
    if not abs(_k_raw(spec, x, y)) < 1e-10:
        raise ConvergenceError(f"no zero of K(., y) found at y = {y}")
    return complex(x)


def qbd_s_roots(spec: ModelSpec, y: complex) -> np.ndarray:
    """Both roots of the quadratic K(., y) = 0 for nearest-neighbour boundaries."""
    q1, q2 = spec.q1_left(), spec.q2_down()
    a, b = q1.get(0, 0.0), q1.get(1, 0.0)
    c, d = q2.get(0, 0.0), q2.get(1, 0.0)
    B = y * (a + b - c - d) + c
    C0 = y * (a + b * y)
    if d == 0:
        return np.array([C0 / B])
    disc = np.sqrt(complex(B * B + 4 * d * C0))
    return np.array([(-B + disc) / (2 * d), (-B - disc) / (2 * d)])


def _sweep(spec: ModelSpec, angles) -> np.ndarray:
    seed, prev = 1.0 + 0j, 0.0
    out = []
    for phi in angles:
        steps = max(1, int(np.ceil(abs(phi - prev) / 0.05)))
        for t in np.linspace(prev, phi, steps + 1)[1:]:
            seed = solve_s(spec, np.exp(1j * t), seed)
        prev = phi
        out.append(seed)
    return np.array(out, complex)


@dataclass
class SCurve:
    samples: list[tuple[complex, complex]]
    s_prime_1: float

    @property
    def y(self) -> np.ndarray:
        return np.array([p[0] for p in self.samples])

    @property
    def s(self) -> np.ndarray:
        return np.array([p[1] for p in self.samples])


def solve_s_curve(spec: ModelSpec, n_samples: int = 64) -> SCurve:
    """Zero curve x = s(y) for y on the unit circle, by continuation from y = 1."""
    if not spec.q1_left() and not spec.q2_down():
        raise ValueError("phase-0 boundary departure rates are all zero")
    phis = 2 * np.pi * np.arange(n_samples) / n_samples
    # continue separately through the upper and the lower half circle
    half = n_samples // 2
    upper = _sweep(spec, phis[: half + 1])
    lower = _sweep(spec, phis[half + 1:][::-1] - 2 * np.pi)[::-1]
    values = np.concatenate([upper, lower])
    out = [(complex(np.exp(1j * f)), complex(v)) for f, v in zip(phis, values)]
    if spec.is_qbd():
        for y, s in out:
            roots = qbd_s_roots(spec, y)
            if np.min(np.abs(roots - s)) > 1e-9:
                raise ConvergenceError(f"closed-form and iterative s(y) disagree at y = {y}")
    return SCurve(out, s_prime_at_one(spec))


# -- Pi_0(0,0) ---------------------------------------------------------------

def phase_probabilities(spec: ModelSpec) -> np.ndarray:
    """Stationary probabilities of the phase process."""
    if spec.n_phases < 1:
        raise ValueError("phase probabilities need at least one modulating phase")
    ps = kernel.eval_phase_solve(spec, 1.0, 1.0)
    F = np.real(ps.F)
    p0 = 1.0 / (1.0 + F.sum())
    return np.concatenate([[p0], p0 * F])


def _pi0_11(spec: ModelSpec) -> float:
    return 1.0 if spec.n_phases == 0 else float(phase_probabilities(spec)[0])


def _limit_ratio(spec: ModelSpec, eps: float, s_prime: float) -> float:
    y = 1.0 - eps
    x = solve_s(spec, y, 1.0 - s_prime * eps)
    if abs(x.imag) > 1e-12:
        raise ConvergenceError("s(y) left the real axis near y = 1")
    x = x.real
    R, _, C, _ = kernel.rkc_raw(spec, x, y)
    tinv = kernel.t_inv_raw(spec, x, y)
    return float(np.real((R - x * y * tinv) / C))


def pi0_origin(spec: ModelSpec, eps=LIMIT_EPS, raise_unstable: bool = True) -> float:
    """Pi_0(0,0) from the limit along the zero curve of K as y -> 1.

    Ratios at y = 1 - eps for three halving steps are combined by two
    Richardson passes.
    """
    sp = s_prime_at_one(spec)
    h1, h2, h3 = (_limit_ratio(spec, e, sp) for e in eps)
    r12 = 2 * h2 - h1
    r23 = 2 * h3 - h2
    if abs(r23 - r12) > LIMIT_SPREAD * max(1.0, abs(r23)):
        raise ConvergenceError(f"limit extrapolation spread {abs(r23 - r12):.2e} too large")
    value = (4 * r23 - r12) / 3 * _pi0_11(spec)
    if value <= 0 and raise_unstable:
        raise UnstableError(f"unstable: Pi0(0,0) limit is {value:.6g} <= 0")
    return float(value)


@dataclass(frozen=True)
class StabilitySummary:
    pi0_origin: float
    phase_probs: np.ndarray
    rho: float
    stable: bool

    def to_dict(self) -> dict:
        return {
            "pi0_origin": self.pi0_origin,
            "phase_probs": self.phase_probs.tolist(),
            "rho": self.rho,
            "stable": self.stable,
        }


def stability_summary(spec: ModelSpec) -> StabilitySummary:
    """Verdict from the sign of the Pi_0(0,0) limit.

    ``rho`` is 1 - Pi_0(0,0)/Pi_0(1,1), the fraction of operating-phase time
    with some queue non-empty.
    """
    probs = phase_probabilities(spec) if spec.n_phases else np.array([1.0])
    v = pi0_origin(spec, raise_unstable=False)
    return StabilitySummary(v, probs, 1.0 - v / probs[0], bool(v > 0))


def network_stability(p: NetworkParams) -> tuple[float, float, bool]:
    """Work brought in per unit time against the operating-mode fraction."""
    prod = p.r12 * p.r21
    if prod >= 1:
        raise ValueError("r12 * r21 must be < 1")
    ratios = [g / t for g, t in zip(p.gamma, p.tau)]
    p0 = 1.0 / (1.0 + sum(ratios))
    probs = [p0] + [p0 * r for r in ratios]
    left = 0.0
    for pk, (l1, l2) in zip(probs, p.lam):
        L1 = (l1 + l2 * p.r21) / (1 - prod)
        L2 = (l2 + l1 * p.r12) / (1 - prod)
        left += pk * (L1 / p.nu[0] + L2 / p.nu[1])
    return left, p0, bool(left < p0)


# -- kernel-zero curves ------------------------------------------------------

def _psi_residual(spec: ModelSpec, g, s):
    """g^2 / T - R at (g s, g / s); T := 1 convention is not used here."""
    x, y = g * s, g / s
    R = kernel.rkc_raw(spec, x, y)[0]
    return g * g * kernel.t_inv_raw(spec, x, y) - R


@dataclass
class KernelZeroCurves:
    s: np.ndarray
    g: np.ndarray
    residual: np.ndarray

    @property
    def S1(self) -> np.ndarray:
        return self.g * self.s

    @property
    def S2(self) -> np.ndarray:
        return self.g / self.s

    def rows(self):
        phi = np.angle(self.s) % (2 * np.pi)
        for f, g, a, b in zip(phi, self.g, self.S1, self.S2):
            yield [f, g.real, g.imag, a.real, a.imag, b.real, b.imag]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["phi", "re_g", "im_g", "re_S1", "im_S1", "re_S2", "im_S2"])
            for r in self.rows():
                wr.writerow([f"{v:.15g}" for v in r])

    def self_intersections(self) -> int:
        """Count crossing segment pairs of S1 (heuristic, warning only)."""
        return _count_crossings(self.S1)


def _count_crossings(pts: np.ndarray) -> int:
    p = np.column_stack([pts.real, pts.imag])
    a, b = p, np.roll(p, -1, axis=0)
    n = len(p)
    count = 0
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(a[i], b[i], a[j], b[j]):
                count += 1
    return count


def _segments_cross(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    return orient(p1, p2, p3) * orient(p1, p2, p4) < 0 and orient(p3, p4, p1) * orient(p3, p4, p2) < 0


def _deflated(spec, g, s):
    # f(0) = 0 always; dividing it out lets the tracked root pass through g = 0
    g = g if abs(g) > 1e-14 else 1e-14
    return complex(_psi_residual(spec, g, s)) / g


def _g_newton(spec, s, seed, iters=60):
    g = complex(seed)
    h = 1e-7
    for _ in range(iters):
        f = _deflated(spec, g, s)
        df = (_deflated(spec, g + h, s) - _deflated(spec, g - h, s)) / (2 * h)
        step = f / df
        g -= step
        if abs(step) < 1e-15 * max(1.0, abs(g)):
            return g, True
    return g, abs(_psi_residual(spec, g, s)) < 1e-12


def kernel_zero_curves(spec: ModelSpec, n_samples: int = 128) -> KernelZeroCurves:
    """Nonzero root g(s) of g^2 = R T at (g s, g / s) for s on the unit circle."""
    if n_samples % 2:
        raise ValueError("n_samples must be even so that s and -s are both sampled")
    phis = 2 * np.pi * np.arange(n_samples) / n_samples
    g = np.empty(n_samples, complex)
    g[0] = 1.0
    cur = 1.0 + 0j
    prev = 0.0
    for i in range(1, n_samples):
        step = phis[i] - prev
        t = prev
        while t < phis[i] - 1e-15:
            dt = min(step, phis[i] - t)
            nxt, ok = _g_newton(spec, np.exp(1j * (t + dt)), cur)
            if ok and abs(nxt - cur) < 0.5:
                cur, t = nxt, t + dt
            else:
                step /= 2
                if step < 1e-8:
                    raise ConvergenceError(f"Newton diverged tracking g(s) at phi = {t + dt:.6f}")
        prev = phis[i]
        g[i] = cur
    s = np.exp(1j * phis)
    x, y = g * s, g / s
    R = kernel.rkc_raw(spec, x, y)[0]
    if spec.n_phases:
        res = np.abs(g * g - R / kernel.t_inv_raw(spec, x, y))
    else:
        res = np.abs(R)
    return KernelZeroCurves(s, g, res)


def write_s_curve_csv(curve: SCurve, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["phi", "re_s", "im_s"])
        for y, s in curve.samples:
            wr.writerow([f"{np.angle(y) % (2 * np.pi):.15g}", f"{s.real:.15g}", f"{s.imag:.15g}"])
