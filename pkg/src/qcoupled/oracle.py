"""Ground-truth oracles: truncated-lattice stationary solves and simulation.

Nothing in here touches generating functions; generators are built directly
from the transition semantics of a ``ModelSpec`` or a ``RetrialParams``.
"""

from __future__ import annotations

import bisect
import csv
import gzip
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import stats
from scipy.sparse.csgraph import connected_components

from .model import ModelSpec
from .retrial import RetrialParams

DEFAULT_MAX_STATES = 2_000_000
POWER_ITERATION_THRESHOLD = 50_000


class OracleError(RuntimeError):
    pass


@dataclass
class TruncatedCtmc:
    """Generator of the chain restricted to ``0..L1 x 0..L2 x phases``.

    Transitions leaving the lattice are dropped, so rows still sum to zero.
    """

    L1: int
    L2: int
    n_phase_states: int
    generator: sp.csr_matrix

    @property
    def n_states(self) -> int:
        return (self.L1 + 1) * (self.L2 + 1) * self.n_phase_states

    def index(self, x1, x2, j):
        return (np.asarray(x1) * (self.L2 + 1) + np.asarray(x2)) * self.n_phase_states + np.asarray(j)

    def unindex(self, i):
        i = np.asarray(i)
        j = i % self.n_phase_states
        rest = i // self.n_phase_states
        return rest // (self.L2 + 1), rest % (self.L2 + 1), j


class _Builder:
    def __init__(self, L1, L2, P):
        self.L1, self.L2, self.P = L1, L2, P
        x1, x2 = np.meshgrid(np.arange(L1 + 1), np.arange(L2 + 1), indexing="ij")
        self.x1, self.x2 = x1.ravel(), x2.ravel()
        self.rows, self.cols, self.vals = [], [], []

    def add(self, mask, j, dx, dy, k, rate):
        if np.ndim(rate) == 0 and rate == 0.0:
            return
        if np.any(np.asarray(rate) < 0):
            raise ValueError("negative rate")
        x1, x2 = self.x1[mask], self.x2[mask]
        t1, t2 = x1 + dx, x2 + dy
        keep = (t1 >= 0) & (t1 <= self.L1) & (t2 >= 0) & (t2 <= self.L2)
        if dx == 0 and dy == 0 and j == k:
            return
        src = (x1[keep] * (self.L2 + 1) + x2[keep]) * self.P + j
        dst = (t1[keep] * (self.L2 + 1) + t2[keep]) * self.P + k
        r = np.broadcast_to(rate, x1.shape)[keep] if np.ndim(rate) else np.full(src.shape, float(rate))
        self.rows.append(src)
        self.cols.append(dst)
        self.vals.append(r)

    def finish(self) -> sp.csr_matrix:
        n = (self.L1 + 1) * (self.L2 + 1) * self.P
        rows = np.concatenate(self.rows) if self.rows else np.zeros(0, int)
        cols = np.concatenate(self.cols) if self.cols else np.zeros(0, int)
        vals = np.concatenate(self.vals) if self.vals else np.zeros(0)
        Q = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        Q.sum_duplicates()
        Q.eliminate_zeros()
        out = np.asarray(Q.sum(axis=1)).ravel()
        return (Q - sp.diags(out)).tocsr()


def build_truncated_ctmc(model: ModelSpec | RetrialParams, L1: int, L2: int, max_states: int = DEFAULT_MAX_STATES) -> TruncatedCtmc:
    """Truncated generator for either a generic model or the retrial system."""
    if L1 < 2 or L2 < 2:
        raise ValueError("truncation levels must be >= 2")
    P = (model.N if isinstance(model, RetrialParams) else model.n_phases) + 1
    n = (L1 + 1) * (L2 + 1) * P
    if n > max_states:
        raise OracleError(f"{n} states exceed the budget of {max_states}")
    b = _Builder(L1, L2, P)
    if isinstance(model, RetrialParams):
        _retrial_transitions(b, model)
    else:
        _model_transitions(b, model)
    return TruncatedCtmc(L1, L2, P, b.finish())


def _model_transitions(b: _Builder, spec: ModelSpec):
    x1, x2 = b.x1, b.x2
    regions = [
        ((x1 >= 1) & (x2 >= 1), spec.interior),
        ((x1 >= 1) & (x2 == 0), spec.boundary_x),
        ((x1 == 0) & (x2 >= 1), spec.boundary_y),
        ((x1 == 0) & (x2 == 0), spec.corner),
    ]
    for mask, f in regions:
        for (dx, dy), r in f.items():
            b.add(mask, 0, dx, dy, 0, r)
    everywhere = np.ones_like(x1, dtype=bool)
    for k in range(1, spec.n_phases + 1):
        for (dx, dy), r in spec.interior_phase[k - 1].items():
            b.add(everywhere, k, dx, dy, k, r)
    theta = spec.theta
    for j in range(spec.n_phases + 1):
        for k in range(spec.n_phases + 1):
            if j != k and theta[j, k] > 0:
                for (dx, dy), p in spec.switch.jump(j, k).items():
                    b.add(everywhere, j, dx, dy, k, theta[j, k] * p)


def _retrial_transitions(b: _Builder, p: RetrialParams):
    x1, x2 = b.x1, b.x2
    allm = np.ones_like(x1, dtype=bool)
    lam = p.lambda0 + p.lambda1 + p.lambda2
    b.add(allm, 0, 0, 0, 1, lam)
    r1 = np.where(x2 >= 1, p.w * p.alpha1, p.alpha1)
    r2 = np.where(x1 >= 1, (1 - p.w) * p.alpha2, p.alpha2)
    b.add(x1 >= 1, 0, -1, 0, 1, r1[x1 >= 1])
    b.add(x2 >= 1, 0, 0, -1, 1, r2[x2 >= 1])
    for k in range(1, p.N + 1):
        b.add(allm, k, 1, 0, k, p.lambda1)
        b.add(allm, k, 0, 1, k, p.lambda2)
        if k < p.N:
            b.add(allm, k, 0, 0, k + 1, p.lambda0)
        b.add(allm, k, 0, 0, k - 1, p.mu)


@dataclass
class StationaryResult:
    """Stationary vector on a truncated lattice with derived summaries."""

    L1: int
    L2: int
    pi: np.ndarray  # shape (L1+1, L2+1, phases)
    residual: float
    method: str

    @property
    def mean_x1(self) -> float:
        return float(np.einsum("ijk,i->", self.pi, np.arange(self.L1 + 1)))

    @property
    def mean_x2(self) -> float:
        return float(np.einsum("ijk,j->", self.pi, np.arange(self.L2 + 1)))

    @property
    def phase_occupancy(self) -> np.ndarray:
        return self.pi.sum(axis=(0, 1))

    @property
    def pi00(self) -> float:
        """Probability of the origin in phase 0."""
        return float(self.pi[0, 0, 0])

    @property
    def boundary_mass(self) -> float:
        """Mass on the truncation edges x1 = L1 or x2 = L2."""
        return float(self.pi[-1, :, :].sum() + self.pi[:, -1, :].sum() - self.pi[-1, -1, :].sum())

    def metric(self, name: str) -> float:
        return float(getattr(self, name))

    def pgf(self, k: int, x, y):
        """Phase-k generating function of the truncated vector (oracle side)."""
        xp = np.asarray(x, complex)[..., None] ** np.arange(self.L1 + 1)
        yp = np.asarray(y, complex)[..., None] ** np.arange(self.L2 + 1)
        return np.einsum("...i,ij,...j->...", xp, self.pi[:, :, k], yp)

    def export_csv(self, path: str | Path, cutoff: float = 1e-15) -> None:
        opener = gzip.open if str(path).endswith(".gz") else open
        with opener(path, "wt", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x1", "x2", "phase", "prob"])
            for (i, j, k), v in np.ndenumerate(self.pi):
                if v >= cutoff:
                    wr.writerow([i, j, k, repr(float(v))])


def _closed_class(Q: sp.csr_matrix) -> np.ndarray:
    """States of the unique closed communicating class.

    Transient states (e.g. a queue that never receives work) carry no
    stationary mass; several closed classes mean the chain has no unique
    stationary law.
    """
    n_comp, label = connected_components(Q, directed=True, connection="strong")
    if n_comp == 1:
        return np.arange(Q.shape[0])
    coo = Q.tocoo()
    leaving = label[coo.row] != label[coo.col]
    open_comp = np.zeros(n_comp, bool)
    open_comp[label[coo.row[leaving]]] = True
    closed = np.nonzero(~open_comp)[0]
    if closed.size != 1:
        raise OracleError(f"truncated chain has {closed.size} closed classes")
    return np.nonzero(label == closed[0])[0]


def solve_stationary(ctmc: TruncatedCtmc, method: str = "auto", tol: float = 1e-12, max_iter: int = 200_000) -> StationaryResult:
    """Stationary vector of a truncated generator.

    ``auto`` uses a direct sparse solve up to 50k states and uniformised
    power iteration above, falling back to the direct solve when the
    iteration cap is hit.
    """
    full = ctmc.generator
    keep = _closed_class(full)
    Q = full[keep][:, keep].tocsr() if keep.size < full.shape[0] else full
    n = Q.shape[0]
    if method == "auto":
        method = "direct" if n <= POWER_ITERATION_THRESHOLD else "power"
    pi = None
    if method == "power":
        pi = _power_iteration(Q, tol, max_iter)
        if pi is None:
            method = "direct"
    if method == "direct":
        A = Q.T.tolil()
        A[n - 1, :] = np.ones(n)
        rhs = np.zeros(n)
        rhs[n - 1] = 1.0
        pi = spla.spsolve(A.tocsc(), rhs)
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()
    if keep.size < full.shape[0]:
        padded = np.zeros(full.shape[0])
        padded[keep] = pi
        pi = padded
    residual = float(np.max(np.abs(full.T @ pi)))
    if residual > 1e-9:
        raise OracleError(f"stationary residual {residual:.3e} too large")
    shaped = pi.reshape(ctmc.L1 + 1, ctmc.L2 + 1, ctmc.n_phase_states)
    return StationaryResult(ctmc.L1, ctmc.L2, shaped, residual, method)


def _power_iteration(Q: sp.csr_matrix, tol: float, max_iter: int):
    n = Q.shape[0]
    lam = 1.05 * float(np.max(-Q.diagonal()))
    PT = (sp.identity(n) + Q / lam).T.tocsr()
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = PT @ pi
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) <= tol * np.max(nxt):
            return nxt
        pi = nxt
    return None


def stationary(model, L1: int, L2: int | None = None, **kw) -> StationaryResult:
    """Build and solve in one go."""
    return solve_stationary(build_truncated_ctmc(model, L1, L1 if L2 is None else L2), **kw)


@dataclass
class Refinement:
    value: float
    L1: int
    L2: int
    boundary_mass: float
    result: StationaryResult
    history: list


def refine_truncation(
    model,
    target: str | Callable[[StationaryResult], float] = "mean_x1",
    tol: float = 1e-4,
    start: int = 16,
    cap: int = 512,
    stability_check: Callable[[object], bool] | None = None,
) -> Refinement:
    """Double the lattice until the target metric settles to ``tol`` (relative)."""
    if stability_check is not None and not stability_check(model):
        raise OracleError("model is analytically unstable; truncation would not converge")
    get = (lambda r: r.metric(target)) if isinstance(target, str) else target
    L = start
    prev = None
    history = []
    while L <= cap:
        res = stationary(model, L, L)
        val = get(res)
        history.append((L, val, res.boundary_mass))
        if prev is not None and abs(val - prev) <= tol * max(abs(val), 1e-300):
            return Refinement(val, L, L, res.boundary_mass, res, history)
        prev = val
        L *= 2
    raise OracleError(f"truncation did not converge up to L={cap}: {history}")


def escaping_mass_verdict(model, levels=(32, 64, 128), threshold: float = 1e-4) -> tuple[bool, list[float]]:
    """Oracle stability verdict: stable iff edge mass is small and shrinking."""
    masses = [stationary(model, L, L).boundary_mass for L in levels]
    stable = masses[-1] < threshold and masses[-1] <= masses[0]
    return stable, masses


# -- simulation -----------------------------------------------------------

@dataclass
class SimEstimate:
    mean_x1: float
    mean_x2: float
    half_x1: float
    half_x2: float
    phase_occupancy: np.ndarray
    horizon: float
    seed: int
    n_batches: int
    events: int

    def covers(self, x1: float | None = None, x2: float | None = None) -> bool:
        ok = True
        if x1 is not None:
            ok &= abs(self.mean_x1 - x1) <= self.half_x1
        if x2 is not None:
            ok &= abs(self.mean_x2 - x2) <= self.half_x2
        return bool(ok)


def simulate(
    model,
    horizon: float,
    seed: int,
    n_batches: int = 30,
    warmup: float = 0.1,
    level_cap: int = 400,
    confidence: float = 0.95,
) -> SimEstimate:
    """Exact-jump simulation with batch-means confidence intervals.

    The chain is the truncated chain at ``level_cap``; with a generous cap the
    edges are never reached in practice.
    """
    if n_batches < 30:
        raise ValueError("at least 30 batches are required")
    ctmc = build_truncated_ctmc(model, level_cap, level_cap)
    Q = ctmc.generator.tocsr()
    diag = -Q.diagonal()
    offd = (Q - sp.diags(Q.diagonal())).tocsr()
    offd.eliminate_zeros()
    indptr, indices, data = offd.indptr, offd.indices, offd.data
    counts = np.diff(indptr)
    if np.any(counts == 0):
        raise OracleError("absorbing state in the truncated chain")
    c = np.cumsum(data)
    before = np.repeat(c[indptr[:-1]] - data[indptr[:-1]], counts)
    rowtot = np.repeat(c[indptr[1:] - 1], counts) - before
    cum = ((c - before) / rowtot).tolist()
    indptr_l, indices_l = indptr.tolist(), indices.tolist()
    x1_of, x2_of, ph_of = (a.tolist() for a in ctmc.unindex(np.arange(Q.shape[0])))
    rng = np.random.default_rng(seed)

    t0 = warmup * horizon
    batch_len = (horizon - t0) / n_batches
    if batch_len <= 0:
        raise ValueError("horizon too short")
    P = ctmc.n_phase_states
    acc1 = np.zeros(n_batches)
    acc2 = np.zeros(n_batches)
    occ = np.zeros(P)

    def accumulate(s, a, b):
        # time-weighted contribution of state s over [a, b) clipped to the observation window
        a = max(a, t0)
        if b <= a:
            return
        while a < b:
            k = min(int((a - t0) / batch_len), n_batches - 1)
            end = min(b, t0 + (k + 1) * batch_len) if k < n_batches - 1 else b
            dt = end - a
            acc1[k] += x1_of[s] * dt
            acc2[k] += x2_of[s] * dt
            occ[ph_of[s]] += dt
            a = end

    s = int(ctmc.index(0, 0, 0))
    t = 0.0
    events = 0
    block = 65536
    exps = rng.exponential(size=block).tolist()
    unis = rng.random(block).tolist()
    pos = 0
    diag_l = diag.tolist()
    while t < horizon:
        if pos == block:
            exps = rng.exponential(size=block).tolist()
            unis = rng.random(block).tolist()
            pos = 0
        rate = diag_l[s]
        dt = exps[pos] / rate
        t_next = min(t + dt, horizon)
        accumulate(s, t, t_next)
        t = t + dt
        a, b = indptr_l[s], indptr_l[s + 1]
        s = indices_l[min(bisect.bisect_right(cum, unis[pos], a, b), b - 1)]
        pos += 1
        events += 1
    means1 = acc1 / batch_len
    means2 = acc2 / batch_len
    tq = stats.t.ppf(0.5 + confidence / 2, n_batches - 1)
    h1 = tq * means1.std(ddof=1) / math.sqrt(n_batches)
    h2 = tq * means2.std(ddof=1) / math.sqrt(n_batches)
    return SimEstimate(
        float(means1.mean()), float(means2.mean()), float(h1), float(h2),
        occ / occ.sum(), horizon, seed, n_batches, events,
    )
