"""Power series approximation in the coupling weight.

Each coefficient V_m of the interior generating function is carried as a
matrix of Taylor coefficients, recovered by a 2-D FFT of its values on a
shifted grid of the unit torus. The boundary unknown V_m(x, 0) is eliminated
pointwise on that grid through the in-disc kernel zero Y(x). Carrying the
whole coefficient matrix makes evaluation at the canonical points (x, 0),
(0, y), (x, Y(x)) and the moments at (1, 1) simple polynomial sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernel
from .model import ModelSpec
from .stability import UnstableError, pi0_origin

ROOT_RADIUS = 1.0 - 1e-6
ROOT_RESIDUAL = 1e-10
DEFAULT_GRID = 256
MAX_GRID = 2048
RESOLVE_TOL = 1e-10
Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


class RootError(ArithmeticError):
    """The kernel zero in the unit disc could not be certified."""


@dataclass
class ScalarFEQ:
    """A scalar functional equation of the form

    ``G V_m = G10 V_m(x,0) + G00 V_m(0,0) + S_{m-1}``

    order by order in w. ``source`` receives the values of V_{m-1} at
    ``(x, y)``, ``(x, 0)`` and ``(0, y)`` together with V_{m-1}(0, 0) and
    returns S_{m-1}. ``v00`` is V_0(0,0); ``None`` means "fix it by
    normalisation". ``residual_G`` is the kernel the root certificate is
    checked against (defaults to ``G``).
    """

    G: Evaluator
    G10: Evaluator
    G00: Evaluator
    source: Callable[..., np.ndarray]
    v00: float | None = None
    name: str = "feq"
    residual_G: Evaluator | None = None

    def origin(self, m: int) -> float:
        return 1.0 if m == 0 else 0.0


def model_feq(spec: ModelSpec, v00: float | None = None) -> ScalarFEQ:
    """Functional equation of a modulated walk, kernels scaled by 1/T.

    Scaling every kernel by the same factor leaves the recursion unchanged
    and keeps it finite when there is no modulation.
    """

    def G(x, y):
        return kernel.psa_kernels_scaled_raw(spec, x, y)[0]

    def G10(x, y):
        return kernel.psa_kernels_scaled_raw(spec, x, y)[1]

    def G00(x, y):
        return kernel.psa_kernels_scaled_raw(spec, x, y)[2]

    def source(x, y, v, v_x0, v_0y, c):
        return G10(x, y) * (v - v_x0 - v_0y + c)

    def G_unscaled(x, y):
        return kernel.psa_kernels_raw(spec, x, y)[0]

    return ScalarFEQ(G, G10, G00, source, v00, "model", G_unscaled)


# -- kernel zero ----------------------------------------------------------

def _winding(feq: ScalarFEQ, xs: np.ndarray, radius: float, nodes: int = 64, max_nodes: int = 1 << 15):
    """Winding numbers of y -> G(x, y) on |y| = radius, plus root seeds.

    Each x gets its own node count, doubled until no argument step exceeds
    0.5 rad.
    """
    wind = np.zeros(xs.shape, int)
    seed = np.zeros(xs.shape, complex)
    todo = np.arange(xs.size)
    n = nodes
    while todo.size:
        phi = 2 * np.pi * np.arange(n) / n
        ys = radius * np.exp(1j * phi)
        f = np.asarray(feq.G(xs[todo, None], ys[None, :]), complex)
        dlog = np.log(np.roll(f, -1, axis=1) / f)
        if not np.all(np.isfinite(dlog)):
            raise RootError("kernel vanishes on the winding contour")
        ok = np.all(np.abs(dlog.imag) < 0.5, axis=1) | (n >= max_nodes)
        ymid = radius * np.exp(1j * (phi + np.pi / n))
        done = todo[ok]
        wind[done] = np.rint(dlog[ok].imag.sum(axis=1) / (2 * np.pi)).astype(int)
        seed[done] = (ymid[None, :] * dlog[ok]).sum(axis=1) / (2j * np.pi)
        todo = todo[~ok]
        n *= 2
    return wind, seed


def _newton(G: Evaluator, xs, ys, iters: int = 60):
    h = 1e-7
    ys = ys.copy()
    for _ in range(iters):
        f = G(xs, ys)
        df = (G(xs, ys + h) - G(xs, ys - h)) / (2 * h)
        step = f / df
        ys = ys - step
        if np.all(np.abs(step) < 1e-15 * np.maximum(1.0, np.abs(ys))):
            break
    return ys


def roots_in_disc(feq: ScalarFEQ, xs) -> np.ndarray:
    """Vectorised :func:`find_root_in_disc` over an array of x values."""
    xs = np.atleast_1d(np.asarray(xs, complex))
    if np.any(xs == 0):
        raise ValueError("x = 0 is excluded")
    if np.any(np.abs(xs) > 1 + kernel.BIDISC_TOL):
        raise ValueError("x outside the closed unit disc")
    out = np.ones(xs.shape, complex)
    work = np.abs(xs - 1) > 1e-14
    if not np.any(work):
        return out
    xw = xs[work]
    wind, seed = _winding(feq, xw, ROOT_RADIUS)
    if np.any(wind != 1):
        bad = xw[wind != 1][0]
        raise RootError(f"winding count {wind[wind != 1][0]} != 1 at x = {bad}")
    ys = _newton(feq.G, xw, seed)
    check = feq.residual_G or feq.G
    res = np.abs(check(xw, ys))
    if np.any(res >= ROOT_RESIDUAL) or np.any(np.abs(ys) >= 1 + kernel.BIDISC_TOL):
        i = int(np.argmax(res))
        raise RootError(f"Newton did not certify a root at x = {xw[i]} (residual {res[i]:.2e})")
    out[work] = ys
    return out


def find_root_in_disc(feq: ScalarFEQ, x: complex) -> complex:
    """The unique zero y = Y(x) of G(x, .) in the closed unit disc."""
    return complex(roots_in_disc(feq, np.array([x]))[0])


# -- torus grid -----------------------------------------------------------

@dataclass
class TorusGrid:
    """Shifted n-point grid on the unit circle, avoiding z = 1."""

    n: int

    @property
    def shift(self) -> float:
        return math.pi / self.n

    @property
    def points(self) -> np.ndarray:
        return np.exp(1j * (2 * np.pi * np.arange(self.n) / self.n + self.shift))

    def coefficients(self, values: np.ndarray) -> np.ndarray:
        """Taylor coefficients c_ij from values f(z_a, z_b) on the grid."""
        idx = np.arange(self.n)
        phase = np.exp(-1j * self.shift * (idx[:, None] + idx[None, :]))
        return np.fft.fft2(values) / self.n**2 * phase

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`coefficients`."""
        idx = np.arange(self.n)
        phase = np.exp(1j * self.shift * (idx[:, None] + idx[None, :]))
        return np.fft.ifft2(coeffs * phase) * self.n**2

    def along_grid_x(self, coeffs: np.ndarray, y: np.ndarray) -> np.ndarray:
        """f(z_a, y_a) for one y per grid point: FFT in x, Horner in y."""
        idx = np.arange(self.n)
        h = np.fft.ifft(coeffs * np.exp(1j * self.shift * idx)[:, None], axis=0) * self.n
        used = np.nonzero(np.any(coeffs != 0, axis=0))[0]
        acc = np.zeros(self.n, complex)
        for j in range(used[-1] if used.size else -1, -1, -1):
            acc = acc * y + h[:, j]
        return acc


def degree_profile(coeffs: np.ndarray) -> np.ndarray:
    """Largest coefficient magnitude at each total degree i + j."""
    n = coeffs.shape[0]
    deg = np.add.outer(np.arange(n), np.arange(n)).ravel()
    out = np.zeros(2 * n - 1)
    np.maximum.at(out, deg, np.abs(coeffs).ravel())
    return out


def truncate_resolved(coeffs: np.ndarray, margin: float = 10.0) -> tuple[np.ndarray, int]:
    """Drop coefficients of total degree at or above the round-off plateau.

    The plateau level is the median of the degree profile over the upper
    half of the degrees, where a resolved Taylor series has nothing left.
    Returns the truncated matrix, the cut-off degree and the plateau level
    relative to the largest coefficient.
    """
    n = coeffs.shape[0]
    prof = degree_profile(coeffs)
    floor = float(np.median(prof[n // 2: n]))
    above = np.nonzero(prof[: n // 2] > margin * floor)[0]
    cut = int(above[-1]) + 1 if above.size else 1
    deg = np.add.outer(np.arange(n), np.arange(n))
    return np.where(deg < cut, coeffs, 0.0), cut, floor / max(prof.max(), 1e-300)


def series_eval(coeffs: np.ndarray, x, y):
    """Evaluate sum c_ij x^i y^j for broadcastable x, y."""
    x = np.asarray(x, complex)
    y = np.asarray(y, complex)
    x, y = np.broadcast_arrays(x, y)
    n1, n2 = coeffs.shape
    xp = x[..., None] ** np.arange(n1)
    yp = y[..., None] ** np.arange(n2)
    return np.einsum("...i,ij,...j->...", xp, coeffs, yp)


def first_moments(coeffs: np.ndarray) -> tuple[float, float]:
    """d/dx and d/dy of the coefficient series at (1, 1)."""
    i = np.arange(coeffs.shape[0])
    j = np.arange(coeffs.shape[1])
    return float(np.real(i @ coeffs.sum(axis=1))), float(np.real(coeffs.sum(axis=0) @ j))


# -- recursion ------------------------------------------------------------

@dataclass
class PsaOrder:
    """One coefficient V_m of the w-expansion."""

    m: int
    coeffs: np.ndarray
    grid_values: np.ndarray
    x_axis: np.ndarray  # V_m(x_a, 0) on the grid
    origin: float  # nominal V_m(0, 0)
    cutoff: int = 0  # total degree kept after truncation
    noise: float = 0.0  # relative round-off plateau before truncation

    def __call__(self, x, y):
        return series_eval(self.coeffs, x, y)

    def on_x_axis(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, complex), self.coeffs[:, 0])

    def on_y_axis(self, y):
        return np.polynomial.polynomial.polyval(np.asarray(y, complex), self.coeffs[0, :])


@dataclass
class PsaSeries:
    """Solved coefficients V_0..V_M of a scalar functional equation."""

    feq: ScalarFEQ
    grid: TorusGrid
    orders: list[PsaOrder]
    y_roots: np.ndarray
    scale: float
    y_root_cache: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return len(self.orders) - 1

    @property
    def v1(self) -> np.ndarray:
        return np.array([first_moments(o.coeffs)[0] for o in self.orders])

    @property
    def v2(self) -> np.ndarray:
        return np.array([first_moments(o.coeffs)[1] for o in self.orders])

    @property
    def at_one(self) -> np.ndarray:
        """V_m(1, 1) for every order."""
        return np.array([np.real(o.coeffs.sum()) for o in self.orders])

    @property
    def at_origin(self) -> np.ndarray:
        """V_m(0, 0) recovered from the coefficients."""
        return np.array([np.real(o.coeffs[0, 0]) for o in self.orders])

    def noise(self) -> float:
        """Worst relative round-off plateau over all orders."""
        return max(o.noise for o in self.orders)

    def evaluate(self, m: int, x, y, method: str = "series"):
        """V_m(x, y) from the coefficient series or the direct kernel formula."""
        if method == "series":
            return self.orders[m](x, y)
        if method == "direct":
            return self._direct(m, complex(x), complex(y))
        raise ValueError(f"unknown method {method!r}")

    def root(self, x: complex, use_cache: bool = True) -> complex:
        key = (round(x.real, 12), round(x.imag, 12))
        if use_cache and key in self.y_root_cache:
            return self.y_root_cache[key]
        Y = find_root_in_disc(self.feq, x)
        if use_cache:
            self.y_root_cache[key] = Y
        return Y

    def _direct(self, m: int, x: complex, y: complex, use_cache: bool = True) -> complex:
        if x == 0:
            raise ValueError("direct evaluation needs x != 0")
        f = self.feq
        Y = self.root(x, use_cache)
        c = self.scale * f.origin(m)
        if m == 0:
            S_root = S_pt = 0.0
        else:
            p = self.orders[m - 1]
            cp = self.scale * f.origin(m - 1)
            S_root = f.source(x, Y, p(x, Y), p.on_x_axis(x), p.on_y_axis(Y), cp)
            S_pt = f.source(x, y, p(x, y), p.on_x_axis(x), p.on_y_axis(y), cp)
        a = -(f.G00(x, Y) * c + S_root) / f.G10(x, Y)
        return complex((f.G10(x, y) * a + f.G00(x, y) * c + S_pt) / f.G(x, y))


def _recursion(feq: ScalarFEQ, M: int, grid: TorusGrid, resolve_tol: float | None):
    """Orders 0..M at unit V_0(0,0); None if order 0 is not resolved by the grid."""
    z = grid.points
    X, Yg = z[:, None], z[None, :]
    G = np.asarray(feq.G(X, Yg), complex)
    G10 = np.asarray(feq.G10(X, Yg), complex)
    G00 = np.asarray(feq.G00(X, Yg), complex)
    Yr = roots_in_disc(feq, z)
    G10r = np.asarray(feq.G10(z, Yr), complex)
    G00r = np.asarray(feq.G00(z, Yr), complex)

    orders: list[PsaOrder] = []
    prev = None
    for m in range(M + 1):
        c = feq.origin(m)
        if prev is None:
            S_grid = np.zeros_like(G)
            S_root = np.zeros_like(z)
        else:
            cp = feq.origin(m - 1)
            S_grid = feq.source(X, Yg, prev.grid_values, prev.x_axis[:, None], prev.on_y_axis(z)[None, :], cp)
            S_root = feq.source(z, Yr, grid.along_grid_x(prev.coeffs, Yr), prev.x_axis, prev.on_y_axis(Yr), cp)
        a = -(G00r * c + S_root) / G10r
        vals = (G10 * a[:, None] + G00 * c + S_grid) / G
        coeffs, cut, noise = truncate_resolved(grid.coefficients(vals))
        if m == 0 and resolve_tol is not None and noise > resolve_tol:
            return None, Yr
        # feed the next order the filtered function, not the raw samples
        vals = grid.values(coeffs)
        a = np.polynomial.polynomial.polyval(z, coeffs[:, 0])
        prev = PsaOrder(m, coeffs, vals, a, c, cut, noise)
        orders.append(prev)
    return orders, Yr


def solve_psa(
    feq: ScalarFEQ,
    M: int,
    n_grid: int = DEFAULT_GRID,
    norm_target: float | None = None,
    max_grid: int = MAX_GRID,
    resolve_tol: float = RESOLVE_TOL,
) -> PsaSeries:
    """Solve the order-by-order recursion up to order M.

    With ``feq.v00`` unset, V_0(0,0) is fixed by requiring V_0(1,1) to equal
    ``norm_target``; the recursion is homogeneous in V_0(0,0) so every order
    is computed once at unit scale and rescaled. The grid is doubled up to
    ``max_grid`` while the order-0 coefficients have not decayed to
    ``resolve_tol`` relative to their peak (slow decay near instability).
    """
    if M < 0:
        raise ValueError("M must be >= 0")
    n = n_grid
    while True:
        grid = TorusGrid(n)
        orders, Yr = _recursion(feq, M, grid, resolve_tol)
        if orders is not None:
            break
        if 2 * n > max_grid:
            raise RootError(f"coefficients not resolved on a {n}-point grid; the model may be close to instability")
        n *= 2
    z = grid.points

    if feq.v00 is not None:
        scale = float(feq.v00)
    else:
        if norm_target is None:
            raise ValueError("either feq.v00 or norm_target is required")
        scale = norm_target / float(np.real(orders[0].coeffs.sum()))
    for o in orders:
        o.coeffs *= scale
        o.grid_values *= scale
        o.x_axis *= scale
        o.origin *= scale
    series = PsaSeries(feq, grid, orders, Yr, scale)
    for x, Y in zip(z, Yr):
        series.y_root_cache[(round(x.real, 12), round(x.imag, 12))] = Y
    return series


# -- assembly for the modulated walk ----------------------------------------

@dataclass(frozen=True)
class PhaseTotals:
    """F_{0,k}(1,1) and their first partial derivatives at (1,1)."""

    F: np.ndarray
    dFx: np.ndarray
    dFy: np.ndarray

    @property
    def norm(self) -> float:
        return 1.0 + float(self.F.sum())


def phase_totals(spec: ModelSpec) -> PhaseTotals:
    N = spec.n_phases
    if N == 0:
        z = np.zeros(0)
        return PhaseTotals(z, z, z)
    F = np.real(kernel.phase_solve_raw(spec, 1.0, 1.0)[0])
    dFx = np.array([
        np.real(kernel.contour_derivative(lambda x, k=k: kernel.phase_solve_raw(spec, x, 1.0)[0][..., k], 1.0, 1))
        for k in range(N)
    ])
    dFy = np.array([
        np.real(kernel.contour_derivative(lambda y, k=k: kernel.phase_solve_raw(spec, 1.0, y)[0][..., k], 1.0, 1))
        for k in range(N)
    ])
    return PhaseTotals(F, dFx, dFy)


def solve_model_psa(spec: ModelSpec, M: int, n_grid: int = DEFAULT_GRID, v00: float | None = None) -> PsaSeries:
    """PSA session for a modulated walk, normalised by the phase probabilities."""
    totals = phase_totals(spec)
    return solve_psa(model_feq(spec, v00), M, n_grid, norm_target=1.0 / totals.norm)


def psa_coefficient_eval(series: PsaSeries, m: int, x: complex, y: complex) -> complex:
    """V_m(x, y) at a point of the bidisc."""
    if abs(x) > 1 + kernel.BIDISC_TOL or abs(y) > 1 + kernel.BIDISC_TOL:
        raise ValueError("point outside the closed unit bidisc")
    if m > series.M:
        raise ValueError(f"order {m} not computed (M = {series.M})")
    return complex(series.evaluate(m, x, y))


def psa_moment_series(spec: ModelSpec, M: int, n_grid: int = DEFAULT_GRID, series: PsaSeries | None = None):
    """Moment coefficients (v_{m,1}, v_{m,2}) for m = 0..M.

    Raises UnstableError for a model without a stationary law; the
    recursion itself would still run and return meaningless numbers.
    """
    pi00 = pi0_origin(spec, raise_unstable=False)
    if not pi00 > 0:
        raise UnstableError(f"model is unstable (Pi0(0,0) limit {pi00:.6g}); no moments to expand")
    s = series or solve_model_psa(spec, M, n_grid)
    return s.v1[: M + 1], s.v2[: M + 1]


def moment_coefficients(v: np.ndarray, totals: PhaseTotals, axis: int) -> np.ndarray:
    """Coefficients e_m of the mean level E(X_axis) = sum_m e_m w^m."""
    dF = totals.dFx if axis == 1 else totals.dFy
    e = totals.norm * np.asarray(v, float)
    e[0] += dF.sum() / totals.norm
    return e


def truncated_moment(v: np.ndarray, spec: ModelSpec | PhaseTotals, w: float, M: int, axis: int = 1) -> float:
    """Mean level from the first M+1 moment coefficients at weight w."""
    if not 0 <= w < 1:
        raise ValueError("w must be in [0, 1)")
    if M >= len(v):
        raise ValueError(f"only {len(v)} orders available")
    totals = spec if isinstance(spec, PhaseTotals) else phase_totals(spec)
    e = moment_coefficients(v[: M + 1], totals, axis)
    return float(np.polynomial.polynomial.polyval(w, e))


# -- Pade -----------------------------------------------------------------

class PadeError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PadeApproximant:
    """Rational function sum num[l] w^l / sum den[k] w^k with num[0] = 1."""

    num: np.ndarray
    den: np.ndarray

    @property
    def L(self) -> int:
        return len(self.num) - 1

    @property
    def K(self) -> int:
        return len(self.den) - 1

    def __call__(self, w):
        P = np.polynomial.polynomial.polyval(w, self.num)
        Q = np.polynomial.polynomial.polyval(w, self.den)
        return P / Q

    def taylor(self, n: int) -> np.ndarray:
        """First n Taylor coefficients of the approximant."""
        out = np.zeros(n)
        q0 = self.den[0]
        for i in range(n):
            s = self.num[i] if i <= self.L else 0.0
            for k in range(1, min(i, self.K) + 1):
                s -= self.den[k] * out[i - k]
            out[i] = s / q0
        return out

    def pole_free_on_unit_interval(self, step: float = 1e-3) -> bool:
        w = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
        q = np.polynomial.polynomial.polyval(w, self.den)
        return bool(np.all(q > 0) or np.all(q < 0))

    def to_dict(self) -> dict:
        return {"L": self.L, "K": self.K, "num": self.num.tolist(), "den": self.den.tolist()}


def pade_from_series(series, L: int, K: int, value_at_one: float | None = None) -> PadeApproximant:
    """[L/K] Pade approximant of a power series in w.

    With ``value_at_one`` the last Taylor condition is traded for matching
    that value at w = 1 (two-point variant).
    """
    c = np.asarray(series, float)
    if L < 0 or K < 0:
        raise ValueError("orders must be nonnegative")
    n_taylor = L + K + 1 if value_at_one is None else L + K
    if len(c) < n_taylor:
        raise ValueError(f"need {n_taylor} coefficients, got {len(c)}")
    # unknowns: a_0..a_L, b_1..b_K with b_0 = 1
    n = L + K + 1
    A = np.zeros((n, n))
    rhs = np.zeros(n)
    for i in range(n_taylor):
        if i <= L:
            A[i, i] = 1.0
        for k in range(1, K + 1):
            if i - k >= 0:
                A[i, L + k] = -c[i - k]
        rhs[i] = c[i]
    if value_at_one is not None:
        A[n - 1, : L + 1] = 1.0
        A[n - 1, L + 1:] = -value_at_one
        rhs[n - 1] = value_at_one
    if np.linalg.matrix_rank(A) < n or np.linalg.cond(A) > 1e14:
        raise PadeError(f"degenerate Pade table entry [{L}/{K}]; lower K")
    sol = np.linalg.solve(A, rhs)
    num = sol[: L + 1]
    den = np.concatenate([[1.0], sol[L + 1:]])
    if num[0] == 0:
        raise PadeError("series vanishes at w = 0; numerator cannot be normalised")
    if value_at_one is not None and abs(den.sum()) < 1e-10 * np.abs(den).sum():
        raise PadeError(f"[{L}/{K}] has a pole at w = 1; the two-point condition is void")
    return PadeApproximant(num / num[0], den / num[0])


# -- w = 0 closed form --------------------------------------------------------

def _w0_values(spec: ModelSpec, grid: TorusGrid, roots: np.ndarray, pi00: float) -> np.ndarray:
    """Closed-form interior generating function on the torus grid at w = 0."""
    s0 = spec.with_w(0.0)
    z = grid.points
    X, Yg = z[:, None], z[None, :]
    R, K, C, _ = kernel.rkc_raw(s0, X, Yg)
    tinv = kernel.t_inv_raw(s0, X, Yg)
    _, Kr, Cr, _ = kernel.rkc_raw(s0, z, roots)
    Kr, Cr = Kr[:, None], Cr[:, None]
    return (K * Cr - Kr * C) / (Kr * (X * Yg * tinv - R)) * pi00


def w_boundary_closed_form(spec: ModelSpec, side: str = "w0", n_grid: int = DEFAULT_GRID, pi00: float | None = None):
    """Mean levels (E(X1), E(X2)) of the trivially coupled model.

    ``w0`` evaluates the model as if w = 0, ``w1`` as if w = 1 (by exchanging
    the coordinates). Returns the pair and the total mass as a check.
    """
    if side == "w1":
        (e2, e1), mass = w_boundary_closed_form(spec.swapped(), "w0", n_grid, pi00)
        return (e1, e2), mass
    if side != "w0":
        raise ValueError("side must be 'w0' or 'w1'")
    s0 = spec.with_w(0.0)
    grid = TorusGrid(n_grid)
    feq = model_feq(s0)
    roots = roots_in_disc(feq, grid.points)
    totals = phase_totals(s0)
    unit = _w0_values(s0, grid, roots, 1.0)
    coeffs = grid.coefficients(unit)
    target = 1.0 / totals.norm
    if pi00 is None:
        pi00 = target / float(np.real(coeffs.sum()))
    coeffs = coeffs * pi00
    v1, v2 = first_moments(coeffs)
    e1 = moment_coefficients(np.array([v1]), totals, 1)[0]
    e2 = moment_coefficients(np.array([v2]), totals, 2)[0]
    mass = float(np.real(coeffs.sum())) * totals.norm
    return (float(e1), float(e2)), mass
