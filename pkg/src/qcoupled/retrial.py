"""Single-server retrial system with a finite priority line and two coupled orbits.

The phase is the number of jobs at the server plus the priority line
(0..N); the two levels are the orbit lengths. Orbit i retries at rate
alpha_i when the other orbit is empty and at a w-weighted share otherwise.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from . import psa

DENOM_MIN = 1e-14


class RetrialError(ArithmeticError):
    pass


@dataclass(frozen=True)
class RetrialParams:
    lambda0: float
    lambda1: float
    lambda2: float
    mu: float
    alpha1: float
    alpha2: float
    N: int
    w: float = 0.5

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "mu", "alpha1", "alpha2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.lambda0 < 0:
            raise ValueError("lambda0 must be >= 0")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError("N must be an integer >= 2")
        if not 0.0 <= self.w <= 1.0:
            raise ValueError("w must lie in [0, 1]")

    @property
    def lam(self) -> float:
        return self.lambda0 + self.lambda1 + self.lambda2

    @property
    def rho0(self) -> float:
        return self.lambda0 / self.mu

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    def with_w(self, w: float) -> "RetrialParams":
        return replace(self, w=w)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "RetrialParams":
        fields = ("lambda0", "lambda1", "lambda2", "mu", "alpha1", "alpha2", "N", "w")
        unknown = set(d) - set(fields)
        if unknown:
            raise ValueError(f"unknown retrial keys: {sorted(unknown)}")
        return cls(**{k: (int(d[k]) if k == "N" else float(d[k])) for k in fields if k in d})


def _u(p: RetrialParams, x, y):
    u1 = p.mu + p.lambda0 + p.lambda1 * (1 - x) + p.lambda2 * (1 - y)
    return u1, u1 - p.lambda0


def sk_raw(p: RetrialParams, x, y) -> np.ndarray:
    """s_1..s_{N-1} stacked on the last axis."""
    x = np.asarray(x, complex)
    y = np.asarray(y, complex)
    _, u2 = _u(p, x, y)
    out = np.zeros(np.broadcast(x, y).shape + (p.N - 1,), complex)
    nxt = np.zeros(out.shape[:-1], complex)
    for k in range(p.N - 1, 0, -1):
        den = u2 + (p.lambda0 if k != p.N - 1 else 0.0) - p.mu * nxt
        if np.any(np.abs(den) < DENOM_MIN):
            raise RetrialError(f"vanishing denominator in s_{k}")
        nxt = p.lambda0 / den
        out[..., k - 1] = nxt
    return out


def retrial_sk(p: RetrialParams, x: complex, y: complex) -> np.ndarray:
    """Ratios s_k = Pi_{k+1}/Pi_k, k = 1..N-1, at a point of the bidisc."""
    if abs(x) > 1 + 1e-9 or abs(y) > 1 + 1e-9:
        raise ValueError("point outside the closed unit bidisc")
    return sk_raw(p, x, y)


def busy_factor(p: RetrialParams, x, y):
    """1 + s_1 + s_1 s_2 + ... so that sum_{k>=1} Pi_k = factor * Pi_1."""
    s = sk_raw(p, x, y)
    total = np.ones(s.shape[:-1], complex)
    prod = np.ones_like(total)
    for k in range(p.N - 1):
        prod = prod * s[..., k]
        total = total + prod
    return total


def _h(p: RetrialParams, x, y):
    u1, _ = _u(p, x, y)
    return p.mu * (1 + sk_raw(p, x, y)[..., 0]) - u1


def retrial_rkc(p: RetrialParams, x, y, variant: str = "derived"):
    """R, K, C of the retrial functional equation at weight p.w.

    ``variant='factored'`` uses the alternative grouping of the constant term
    with the (mu - lambda_i z) factors; ``'derived'`` follows from
    eliminating Pi_1 between the first two balance equations.
    """
    x = np.asarray(x, complex)
    y = np.asarray(y, complex)
    w, wb = p.w, 1.0 - p.w
    a1, a2, mu = p.alpha1, p.alpha2, p.mu
    h = _h(p, x, y)
    ahat = p.lam + a1 * w + a2 * wb
    R = ahat * x * y * h + w * a1 * mu * y * (1 - x) + wb * a2 * mu * x * (1 - y)
    K = a2 * mu * x * (1 - y) - a1 * mu * y * (1 - x) + (a2 - a1) * x * y * h
    C = wb * a1 * y * _c_bracket(p, x, y, h, 1, variant) + w * a2 * x * _c_bracket(p, x, y, h, 2, variant)
    return R, K, C


def _c_bracket(p, x, y, h, i, variant):
    own, other = (x, y) if i == 1 else (y, x)
    lam_i = p.lambda1 if i == 1 else p.lambda2
    if variant == "derived":
        return p.mu * (1 - own) + own * h
    if variant == "factored":
        return (1 - own) * (p.mu - lam_i * own) + own * h
    raise ValueError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class RetrialSummary:
    pi_phase: np.ndarray
    pi_empty: float
    rho_hat: float
    stable: bool

    def to_dict(self) -> dict:
        return {
            "pi_phase": self.pi_phase.tolist(),
            "pi_empty": self.pi_empty,
            "rho_hat": self.rho_hat,
            "stable": self.stable,
        }


def retrial_summary(p: RetrialParams) -> RetrialSummary:
    """Phase probabilities, empty-system probability and load.

    Every busy phase feeds the orbits, so orbit balance uses the total busy
    mass B = sum_{k>=1} Pi_k(1,1). Flow balance between the idle phase and
    phase 1 then gives Pi_1 = rho / (1 + rho0 * sum_{k<N} rho0^k); the
    expressions stay finite as lambda0 -> 0.
    """
    r0 = p.rho0
    powers = r0 ** np.arange(p.N)
    pi1 = p.rho / (1.0 + r0 * powers.sum())
    busy = pi1 * powers
    busy_mass = float(busy.sum())
    pi_phase = np.concatenate([[1.0 - busy_mass], busy])
    rho_hat = busy_mass * (1.0 + p.lambda1 / p.alpha1 + p.lambda2 / p.alpha2)
    return RetrialSummary(pi_phase, 1.0 - rho_hat, rho_hat, bool(rho_hat < 1.0))


# -- PSA adapter ------------------------------------------------------------

def _split(p: RetrialParams, variant: str):
    """w-free parts and w-slopes of R and C (K carries no w)."""
    p0, p1 = p.with_w(0.0), p.with_w(1.0)

    def parts(x, y):
        R0, K, C0 = retrial_rkc(p0, x, y, variant)
        R1, _, C1 = retrial_rkc(p1, x, y, variant)
        return R0, R1 - R0, K, C0, C1 - C0

    return parts


def retrial_feq(p: RetrialParams, variant: str = "derived") -> psa.ScalarFEQ:
    """Retrial equation regrouped order by order in w.

    With R = R0 + w R1 and C = C0 + w C1, order m reads
    R0 V_m = K V_m(x,0) + C0 V_m(0,0)
             - R1 V_{m-1} - K [V_{m-1}(x,0) + V_{m-1}(0,y)] + C1 V_{m-1}(0,0).
    """
    summ = retrial_summary(p)
    if not summ.stable:
        raise RetrialError(f"rho_hat = {summ.rho_hat:.6g} >= 1; the empty-system probability is undefined")
    parts = _split(p, variant)

    def G(x, y):
        return parts(x, y)[0]

    def G10(x, y):
        return parts(x, y)[2]

    def G00(x, y):
        return parts(x, y)[3]

    def source(x, y, v, v_x0, v_0y, c):
        _, R1, K, _, C1 = parts(x, y)
        return -R1 * v - K * (v_x0 + v_0y) + C1 * c

    return psa.ScalarFEQ(G, G10, G00, source, summ.pi_empty, f"retrial-{variant}")


@dataclass
class RetrialPsa:
    """PSA coefficients of the all-phase orbit-length generating function."""

    params: RetrialParams
    series: psa.PsaSeries
    total_coeffs: list[np.ndarray]

    @property
    def mass(self) -> np.ndarray:
        return np.array([np.real(c.sum()) for c in self.total_coeffs])

    @property
    def e1(self) -> np.ndarray:
        return np.array([psa.first_moments(c)[0] for c in self.total_coeffs])

    @property
    def e2(self) -> np.ndarray:
        return np.array([psa.first_moments(c)[1] for c in self.total_coeffs])

    def means(self, w: float, M: int | None = None) -> tuple[float, float]:
        M = self.series.M if M is None else M
        pw = w ** np.arange(M + 1)
        return float(pw @ self.e1[: M + 1]), float(pw @ self.e2[: M + 1])


def retrial_psa(p: RetrialParams, M: int, n_grid: int = 128, variant: str = "derived") -> RetrialPsa:
    """Solve the retrial PSA and add the busy phases order by order.

    The first balance equation gives mu Pi_1 in terms of Pi_0 and its
    boundary values; the busy phases follow as busy_factor * Pi_1.
    """
    feq = retrial_feq(p, variant)
    series = psa.solve_psa(feq, M, n_grid)
    z = series.grid.points
    X, Y = z[:, None], z[None, :]
    sig = busy_factor(p, X, Y)
    lam, a1, a2, mu = p.lam, p.alpha1, p.alpha2, p.mu
    totals = []
    for m, o in enumerate(series.orders):
        mu_pi1 = (lam + a2) * o.grid_values - (a2 - a1) * o.x_axis[:, None] - a1 * o.origin
        if m > 0:
            q = series.orders[m - 1]
            mu_pi1 += (a1 - a2) * q.grid_values
            mu_pi1 += (a2 - a1) * (q.x_axis[:, None] + q.on_y_axis(z)[None, :])
            mu_pi1 -= (a2 - a1) * q.origin
        total = o.grid_values + sig * mu_pi1 / mu
        totals.append(series.grid.coefficients(total))
    return RetrialPsa(p, series, totals)
