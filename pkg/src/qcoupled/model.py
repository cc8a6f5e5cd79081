"""Markov-modulated reflected random walks in the quarter plane.

A model is described by increment-rate fields for the four regions of the
lattice in the operating phase 0 (interior, the two half-axes and the
origin), one field per modulating phase 1..N, and a phase-switch matrix with
jump distributions attached to each switch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

Increment = tuple[int, int]
RateField = Mapping[Increment, float]

PROB_TOL = 1e-12
EQ_TOL = 1e-12


def _clean_field(entries) -> dict[Increment, float]:
    out: dict[Increment, float] = {}
    items = entries.items() if isinstance(entries, Mapping) else entries
    for key, rate in items:
        dx, dy = int(key[0]), int(key[1])
        out[(dx, dy)] = out.get((dx, dy), 0.0) + float(rate)
    return out


def _close(a: float, b: float, tol: float = EQ_TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class PhaseSwitch:
    """Phase-switch rates ``theta[j, k]`` and the level jumps they trigger.

    ``jumps[(j, k)]`` is a distribution over nonnegative increments. A switch
    without an entry leaves the level unchanged.
    """

    theta: np.ndarray
    jumps: Mapping[tuple[int, int], RateField] = field(default_factory=dict)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
            raise ValueError("theta must be a square matrix")
        np.fill_diagonal(theta, 0.0)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        jumps = {(int(j), int(k)): _clean_field(d) for (j, k), d in dict(self.jumps).items()}
        object.__setattr__(self, "jumps", jumps)

    def jump(self, j: int, k: int) -> dict[Increment, float]:
        return self.jumps.get((j, k), {(0, 0): 1.0})

    def out_rate(self, j: int) -> float:
        return float(self.theta[j].sum())


@dataclass(frozen=True)
class ModelSpec:
    """Full rate description of the modulated random walk.

    Attributes:
        n_phases: N, the number of modulating phases besides phase 0.
        w: coupling weight in [0, 1].
        interior: phase-0 rates for x1 >= 1, x2 >= 1 (increments >= -1).
        interior_phase: rates of phases 1..N, used on the whole lattice.
        boundary_x: phase-0 rates on x1 >= 1, x2 = 0.
        boundary_y: phase-0 rates on x1 = 0, x2 >= 1.
        corner: phase-0 rates at the origin.
        switch: phase-switch rates and jumps.
    """

    n_phases: int
    w: float
    interior: RateField
    interior_phase: tuple[RateField, ...]
    boundary_x: RateField
    boundary_y: RateField
    corner: RateField
    switch: PhaseSwitch

    def __post_init__(self):
        object.__setattr__(self, "n_phases", int(self.n_phases))
        object.__setattr__(self, "w", float(self.w))
        for name in ("interior", "boundary_x", "boundary_y", "corner"):
            object.__setattr__(self, name, _clean_field(getattr(self, name)))
        object.__setattr__(self, "interior_phase", tuple(_clean_field(f) for f in self.interior_phase))
        if len(self.interior_phase) != self.n_phases:
            raise ValueError(f"expected {self.n_phases} phase fields, got {len(self.interior_phase)}")
        if self.switch.theta.shape != (self.n_phases + 1, self.n_phases + 1):
            raise ValueError("theta shape does not match n_phases")

    @property
    def theta(self) -> np.ndarray:
        return self.switch.theta

    def phase_field(self, k: int) -> dict[Increment, float]:
        """Rates of nonnegative increments in phase ``k`` (interior for k=0)."""
        if k == 0:
            return {d: r for d, r in self.interior.items() if d[0] >= 0 and d[1] >= 0}
        return dict(self.interior_phase[k - 1])

    def q1_left(self) -> dict[int, float]:
        """q^{(1)}_{-1,j}(0) keyed by j."""
        return {d[1]: r for d, r in self.boundary_x.items() if d[0] == -1 and r != 0.0}

    def q2_down(self) -> dict[int, float]:
        """q^{(2)}_{i,-1}(0) keyed by i."""
        return {d[0]: r for d, r in self.boundary_y.items() if d[1] == -1 and r != 0.0}

    def is_qbd(self) -> bool:
        fields = [self.interior, self.boundary_x, self.boundary_y, self.corner, *self.interior_phase]
        fields += list(self.switch.jumps.values())
        return all(-1 <= dx <= 1 and -1 <= dy <= 1 for f in fields for dx, dy in f)

    def with_w(self, w: float) -> "ModelSpec":
        """Same model at another coupling weight.

        Interior negative increments are rebuilt from the boundary rates so that
        the coupling identity holds at ``w``.
        """
        interior = {d: r for d, r in self.interior.items() if d[0] >= 0 and d[1] >= 0}
        for j, r in self.q1_left().items():
            interior[(-1, j)] = w * r
        for i, r in self.q2_down().items():
            interior[(i, -1)] = (1.0 - w) * r
        return replace(self, w=w, interior=interior)

    def swapped(self) -> "ModelSpec":
        """Mirror image with the coordinates exchanged and w -> 1 - w."""

        def sw(f):
            return {(dy, dx): r for (dx, dy), r in f.items()}

        jumps = {key: sw(d) for key, d in self.switch.jumps.items()}
        return ModelSpec(
            n_phases=self.n_phases,
            w=1.0 - self.w,
            interior=sw(self.interior),
            interior_phase=tuple(sw(f) for f in self.interior_phase),
            boundary_x=sw(self.boundary_y),
            boundary_y=sw(self.boundary_x),
            corner=sw(self.corner),
            switch=PhaseSwitch(self.switch.theta, jumps),
        )


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str

    def __str__(self):
        return f"({self.rule}): {self.message}"


def validate_model(spec: ModelSpec) -> list[Violation]:
    """Return every violated modelling rule; an empty list means valid."""
    out: list[Violation] = []
    add = lambda rule, msg: out.append(Violation(rule, msg))  # noqa: E731

    regions = {
        "interior": (spec.interior, -1, -1),
        "boundary_x": (spec.boundary_x, -1, 0),
        "boundary_y": (spec.boundary_y, 0, -1),
        "corner": (spec.corner, 0, 0),
    }
    for k, f in enumerate(spec.interior_phase, start=1):
        regions[f"interior_phase[{k}]"] = (f, 0, 0)
    for name, (f, min_dx, min_dy) in regions.items():
        for (dx, dy), r in f.items():
            if not math.isfinite(r) or r < 0:
                add("rates", f"{name} q_{{{dx},{dy}}} = {r} must be finite and nonnegative")
            if dx < min_dx or dy < min_dy:
                rule = "ass2" if name.startswith("interior_phase") else "domain"
                add(rule, f"{name} increment ({dx},{dy}) not allowed in this region")

    if spec.interior.get((-1, -1), 0.0) != 0.0:
        add("as1", "q_{-1,-1}(0) must be 0")
    inner_pos = spec.phase_field(0)
    for name, f in (("boundary_x", spec.boundary_x), ("boundary_y", spec.boundary_y), ("corner", spec.corner)):
        pos = {d: r for d, r in f.items() if d[0] >= 0 and d[1] >= 0}
        for d in set(pos) | set(inner_pos):
            a, b = pos.get(d, 0.0), inner_pos.get(d, 0.0)
            if not _close(a, b):
                add("as1", f"{name} q_{{{d[0]},{d[1]}}} = {a} differs from interior rate {b}")

    if not 0.0 <= spec.w <= 1.0:
        add("coupl", f"w = {spec.w} outside [0, 1]")
    q1, q2 = spec.q1_left(), spec.q2_down()
    for (dx, dy), r in spec.interior.items():
        if dx == -1 and dy >= 0:
            expect = spec.w * q1.get(dy, 0.0)
            if not _close(r, expect):
                add("coupl", f"q_{{-1,{dy}}}(0) = {r} but w*q^(1)_{{-1,{dy}}}(0) = {expect}")
        if dy == -1 and dx >= 0:
            expect = (1.0 - spec.w) * q2.get(dx, 0.0)
            if not _close(r, expect):
                add("coupl", f"q_{{{dx},-1}}(0) = {r} but (1-w)*q^(2)_{{{dx},-1}}(0) = {expect}")
    for j, r in q1.items():
        if (-1, j) not in spec.interior and not _close(spec.w * r, 0.0):
            add("coupl", f"q_{{-1,{j}}}(0) missing, expected {spec.w * r}")
    for i, r in q2.items():
        if (i, -1) not in spec.interior and not _close((1.0 - spec.w) * r, 0.0):
            add("coupl", f"q_{{{i},-1}}(0) missing, expected {(1.0 - spec.w) * r}")

    theta = spec.theta
    if not np.all(np.isfinite(theta)) or np.any(theta < 0):
        add("as3", "phase-switch rates must be finite and nonnegative")
    for (j, k), dist in spec.switch.jumps.items():
        if not (0 <= j <= spec.n_phases and 0 <= k <= spec.n_phases) or j == k:
            add("as3", f"jump distribution for invalid switch ({j},{k})")
            continue
        total = sum(dist.values())
        if abs(total - 1.0) > PROB_TOL:
            add("as3", f"jump distribution ({j},{k}) sums to {total}")
        for (dx, dy), p in dist.items():
            if dx < 0 or dy < 0:
                add("as3", f"jump ({j},{k}) has negative increment ({dx},{dy})")
            if p < 0:
                add("as3", f"jump ({j},{k}) has negative probability {p}")
    return out


def is_symmetric(spec: ModelSpec, tol: float = EQ_TOL) -> bool:
    """Check the phase-0 symmetry assumption (including w = 1/2)."""
    if abs(spec.w - 0.5) > tol:
        return False
    inner = spec.interior
    q1, q2 = spec.q1_left(), spec.q2_down()
    for j in set(q1) | set(q2):
        if abs(q1.get(j, 0.0) - q2.get(j, 0.0)) > tol:
            return False
    idx = {d[1] for d in inner if d[0] == -1} | {d[0] for d in inner if d[1] == -1}
    for j in idx:
        if abs(inner.get((-1, j), 0.0) - inner.get((j, -1), 0.0)) > tol:
            return False
    if abs(inner.get((0, 1), 0.0) - inner.get((1, 0), 0.0)) > tol:
        return False
    N = spec.n_phases
    if N >= 1:
        th = spec.theta[0, 1:]
        if np.ptp(th) > tol:
            return False
        ref = spec.switch.jump(0, 1)
        for k in range(2, N + 1):
            other = spec.switch.jump(0, k)
            for d in set(ref) | set(other):
                if abs(ref.get(d, 0.0) - other.get(d, 0.0)) > tol:
                    return False
    return True


@dataclass(frozen=True)
class NetworkParams:
    """Two-node network with coupled processors and service interruptions.

    ``lam[j] = (lambda_1^(j), lambda_2^(j))`` for mode j = 0..N; ``gamma[k-1]``
    and ``tau[k-1]`` are the failure and repair rates of failed mode k.
    """

    lam: tuple[tuple[float, float], ...]
    nu: tuple[float, float]
    gamma: tuple[float, ...]
    tau: tuple[float, ...]
    r12: float
    r21: float
    w: float

    def __post_init__(self):
        object.__setattr__(self, "lam", tuple((float(a), float(b)) for a, b in self.lam))
        object.__setattr__(self, "nu", tuple(float(v) for v in self.nu))
        object.__setattr__(self, "gamma", tuple(float(v) for v in self.gamma))
        object.__setattr__(self, "tau", tuple(float(v) for v in self.tau))

    @property
    def n_phases(self) -> int:
        return len(self.gamma)

    def check(self) -> None:
        N = self.n_phases
        if len(self.lam) != N + 1 or len(self.tau) != N:
            raise ValueError("lam needs N+1 entries and tau N entries, N = len(gamma)")
        rates = [v for pair in self.lam for v in pair] + list(self.nu) + list(self.gamma) + list(self.tau)
        if any(not math.isfinite(v) or v < 0 for v in rates):
            raise ValueError("all rates must be finite and nonnegative")
        if not (0 <= self.r12 < 1 and 0 <= self.r21 < 1) or self.r12 * self.r21 >= 1:
            raise ValueError("routing probabilities must lie in [0, 1) with r12*r21 < 1")
        if not 0 <= self.w <= 1:
            raise ValueError("w must lie in [0, 1]")

    def replace(self, **kw) -> "NetworkParams":
        return replace(self, **kw)


def build_network_model(p: NetworkParams) -> ModelSpec:
    """Map the two-node network onto the generic model."""
    p.check()
    N = p.n_phases
    nu1, nu2 = p.nu
    lam0 = p.lam[0]
    arrivals = {(1, 0): lam0[0], (0, 1): lam0[1]}
    bx = {(-1, 0): nu1 * (1 - p.r12), (-1, 1): nu1 * p.r12, **arrivals}
    by = {(0, -1): nu2 * (1 - p.r21), (1, -1): nu2 * p.r21, **arrivals}
    interior = {
        (-1, 0): p.w * bx[(-1, 0)],
        (-1, 1): p.w * bx[(-1, 1)],
        (0, -1): (1 - p.w) * by[(0, -1)],
        (1, -1): (1 - p.w) * by[(1, -1)],
        **arrivals,
    }
    phases = tuple({(1, 0): p.lam[k][0], (0, 1): p.lam[k][1]} for k in range(1, N + 1))
    theta = np.zeros((N + 1, N + 1))
    theta[0, 1:] = p.gamma
    theta[1:, 0] = p.tau
    jumps = {}
    for k in range(1, N + 1):
        jumps[(0, k)] = {(0, 0): 1.0}
        jumps[(k, 0)] = {(0, 0): 1.0}
    return ModelSpec(
        n_phases=N,
        w=p.w,
        interior=interior,
        interior_phase=phases,
        boundary_x=bx,
        boundary_y=by,
        corner=dict(arrivals),
        switch=PhaseSwitch(theta, jumps),
    )


def table1_params(lam0=(1.0, 0.8), w: float = 0.5, gamma=(0.5, 0.8)) -> NetworkParams:
    """Network set-up used for the truncation-approximation experiments."""
    return NetworkParams(
        lam=(tuple(lam0), (0.5, 0.6), (0.1, 0.2)),
        nu=(5.0, 6.0),
        gamma=tuple(gamma),
        tau=(5.0, 8.0),
        r12=0.3,
        r21=0.2,
        w=w,
    )


def table2_params(lam: float, gamma: float, nu: float = 6.0, tau=(5.0, 8.0)) -> NetworkParams:
    """Symmetric set-up: equal operating-mode arrivals, failure rates and routing."""
    return NetworkParams(
        lam=((lam, lam), (0.5, 0.6), (0.1, 0.2)),
        nu=(nu, nu),
        gamma=(gamma, gamma),
        tau=tuple(tau),
        r12=0.3,
        r21=0.3,
        w=0.5,
    )


# -- JSON I/O -------------------------------------------------------------

def _field_to_json(f: RateField) -> list[dict]:
    return [{"dx": dx, "dy": dy, "rate": r} for (dx, dy), r in sorted(f.items())]


def _field_from_json(items) -> dict[Increment, float]:
    return _clean_field(((it["dx"], it["dy"]), it["rate"]) for it in items)


def spec_to_dict(spec: ModelSpec) -> dict:
    return {
        "n_phases": spec.n_phases,
        "w": spec.w,
        "interior": _field_to_json(spec.interior),
        "interior_phase": [_field_to_json(f) for f in spec.interior_phase],
        "boundary_x": _field_to_json(spec.boundary_x),
        "boundary_y": _field_to_json(spec.boundary_y),
        "corner": _field_to_json(spec.corner),
        "switch": {
            "theta": spec.theta.tolist(),
            "jumps": [
                {"from": j, "to": k, "dist": [{"dx": dx, "dy": dy, "prob": p} for (dx, dy), p in sorted(d.items())]}
                for (j, k), d in sorted(spec.switch.jumps.items())
            ],
        },
    }


def spec_from_dict(data: Mapping) -> ModelSpec:
    sw = data.get("switch", {})
    n = int(data["n_phases"])
    theta = sw.get("theta", np.zeros((n + 1, n + 1)))
    jumps = {
        (int(j["from"]), int(j["to"])): {(int(e["dx"]), int(e["dy"])): float(e["prob"]) for e in j["dist"]}
        for j in sw.get("jumps", [])
    }
    return ModelSpec(
        n_phases=n,
        w=float(data["w"]),
        interior=_field_from_json(data.get("interior", [])),
        interior_phase=tuple(_field_from_json(f) for f in data.get("interior_phase", [])),
        boundary_x=_field_from_json(data.get("boundary_x", [])),
        boundary_y=_field_from_json(data.get("boundary_y", [])),
        corner=_field_from_json(data.get("corner", [])),
        switch=PhaseSwitch(theta, jumps),
    )


def network_from_dict(data: Mapping) -> NetworkParams:
    return NetworkParams(
        lam=tuple(tuple(v) for v in data["lam"]),
        nu=tuple(data["nu"]),
        gamma=tuple(data.get("gamma", ())),
        tau=tuple(data.get("tau", ())),
        r12=float(data.get("r12", 0.0)),
        r21=float(data.get("r21", 0.0)),
        w=float(data["w"]),
    )


def network_to_dict(p: NetworkParams) -> dict:
    return {
        "lam": [list(v) for v in p.lam],
        "nu": list(p.nu),
        "gamma": list(p.gamma),
        "tau": list(p.tau),
        "r12": p.r12,
        "r21": p.r21,
        "w": p.w,
    }


def load_model(path: str | Path) -> ModelSpec:
    """Load a model file: either the full schema or the network shorthand."""
    data = json.loads(Path(path).read_text())
    if "n_phases" in data:
        return spec_from_dict(data)
    return build_network_model(network_from_dict(data))


def save_model(spec: ModelSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=2))
