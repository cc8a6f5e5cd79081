"""Command-line entry point.

Every command writes a JSON envelope ``<command>.json`` into ``--out``;
tabular commands also write ``<command>.csv`` and a figure rendered from
that table. Exit codes: 0 success, 1 invalid configuration, 2 model
validation failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, model, oracle, plotting, psa, retrial, stability, symmetric

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("validate", "stability", "psa", "symmetric", "retrial", "oracle", "simulate", "curves", "reproduce")
NUMERIC_ERRORS = (
    ArithmeticError,  # root, Pade, stability, retrial and kernel failures all derive from it
    oracle.OracleError,
    np.linalg.LinAlgError,
)
FIG7_ORDERS = (0, 1, 2, 5, 10)
FIG9_LAMBDAS = (0.2, 0.35, 0.5, 0.65, 0.8, 0.95, 1.1)


class ConfigError(ValueError):
    pass


class ModelError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model_path: Path | None = None
    output_path: Path = Path(".")
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.model_path is not None and not Path(self.model_path).is_file():
            raise ConfigError(f"model file {self.model_path} does not exist")


# -- option parsing ----------------------------------------------------------

def parse_w(text: str) -> list[float]:
    """``0.3``, ``0.1,0.2`` or ``start:stop:step`` (stop inclusive)."""
    try:
        if ":" in text:
            a, b, h = (float(t) for t in text.split(":"))
            if h <= 0 or b < a:
                raise ConfigError("w grid needs start <= stop and step > 0")
            n = int(round((b - a) / h))
            ws = [round(a + i * h, 12) for i in range(n + 1)]
        else:
            ws = [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse --w {text!r}") from exc
    if any(not 0 <= w <= 1 for w in ws):
        raise ConfigError("w values must lie in [0, 1]")
    return ws


def parse_pair(text: str, name: str, allow_single: bool = False) -> tuple[int, int]:
    try:
        parts = [int(t) for t in text.split(",")]
        if allow_single and len(parts) == 1:
            parts = parts * 2
        a, b = parts
    except ValueError as exc:
        raise ConfigError(f"--{name} expects two integers 'a,b'") from exc
    if a < 0 or b < 0:
        raise ConfigError(f"--{name} entries must be nonnegative")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qcoupled", description="Coupled queues in a random environment.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("target", nargs="?", help="figure name for 'reproduce' (fig7 or fig9)")
    ap.add_argument("--model", type=Path, help="model JSON (full schema, network or retrial shorthand)")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    ap.add_argument("--order", type=int, default=10, help="PSA truncation order M")
    ap.add_argument("--pade", help="Pade orders 'L,K'")
    ap.add_argument("--w", default=None, help="w value, comma list or start:stop:step")
    ap.add_argument("--trunc", help="CTMC truncation 'L1,L2' or 'L'; refined automatically if omitted")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--format", choices=("csv", "json", "svg"), default="csv",
                    help="csv/json write the table; svg renders figures as SVG instead of PNG")
    ap.add_argument("--grid", type=int, default=psa.DEFAULT_GRID, help="torus grid size for PSA")
    ap.add_argument("--tol", type=float, default=1e-4, help="CTMC refinement tolerance")
    ap.add_argument("--horizon", type=float, default=2e4, help="simulation horizon")
    ap.add_argument("--samples", type=int, default=128, help="samples on the unit circle for curves")
    ap.add_argument("--gamma", type=float, default=0.5, help="failure rate for 'reproduce fig9'")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    opts = {
        "M": ns.order, "seed": ns.seed, "format": ns.format, "grid": ns.grid,
        "tol": ns.tol, "horizon": ns.horizon, "samples": ns.samples, "gamma": ns.gamma,
        "target": ns.target,
    }
    if ns.order < 0 or ns.order > 60:
        raise ConfigError("--order must lie in 0..60")
    if ns.grid < 16 or ns.grid & (ns.grid - 1):
        raise ConfigError("--grid must be a power of two >= 16")
    if ns.tol <= 0 or ns.horizon <= 0 or ns.samples < 8:
        raise ConfigError("--tol and --horizon must be positive, --samples >= 8")
    opts["w"] = parse_w(ns.w) if ns.w is not None else None
    opts["pade"] = parse_pair(ns.pade, "pade") if ns.pade else None
    opts["trunc"] = parse_pair(ns.trunc, "trunc", allow_single=True) if ns.trunc else None
    if ns.command == "reproduce":
        if ns.target not in ("fig7", "fig9"):
            raise ConfigError("reproduce needs a target: fig7 or fig9")
    elif ns.target is not None:
        raise ConfigError(f"unexpected argument {ns.target!r}")
    elif ns.model is None:
        raise ConfigError(f"{ns.command} needs --model")
    return RunConfig(ns.command, ns.model, ns.out, opts)


# -- model loading -------------------------------------------------------------

def _read_json(path: Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


def load_any(path: Path):
    """Return a ModelSpec, or RetrialParams for the retrial shorthand, plus NetworkParams if given."""
    data = _read_json(path)
    try:
        if "alpha1" in data:
            return retrial.RetrialParams.from_dict(data), None
        if "n_phases" in data:
            return model.spec_from_dict(data), None
        net = model.network_from_dict(data)
        return model.build_network_model(net), net
    except (ValueError, KeyError, TypeError) as exc:
        raise ModelError(str(exc)) from exc


def _require_spec(cfg: RunConfig):
    spec, net = load_any(cfg.model_path)
    if isinstance(spec, retrial.RetrialParams):
        raise ConfigError(f"{cfg.command} expects a queueing model, not retrial parameters")
    violations = model.validate_model(spec)
    if violations:
        raise ModelError("; ".join(f"{v.rule}: {v.message}" for v in violations))
    return spec, net


# -- output ------------------------------------------------------------------------

def provenance(method: str, tolerances: dict, cfg: RunConfig) -> dict:
    return {
        "package": "qcoupled",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "method": method,
        "tolerances": tolerances,
        "config": {
            "command": cfg.command,
            "model": str(cfg.model_path) if cfg.model_path else None,
            "options": {k: v for k, v in cfg.options.items() if v is not None},
        },
    }


SCHEMA_PATH = Path(__file__).with_name("envelope.schema.json")


def envelope(cfg: RunConfig, status: str, result, method: str, tolerances: dict, artifacts=()) -> dict:
    return {
        "schema": "qcoupled.envelope/1",
        "command": cfg.command,
        "status": status,
        "result": _jsonable(result),
        "artifacts": [str(Path(a).name) for a in artifacts],
        "provenance": provenance(method, tolerances, cfg),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([f"{v:.12g}" if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def _figure_path(cfg: RunConfig, stem: str) -> Path:
    ext = "svg" if cfg.options["format"] == "svg" else "png"
    return cfg.output_path / f"{stem}.{ext}"


def threads() -> int:
    try:
        n = int(os.environ.get("QCOUPLED_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def _map(fn, items):
    items = list(items)
    n = min(threads(), len(items))
    if n <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(n) as ex:
        return list(ex.map(fn, items))


# -- commands ----------------------------------------------------------------------

def cmd_validate(cfg: RunConfig):
    spec, _ = load_any(cfg.model_path)
    if isinstance(spec, retrial.RetrialParams):
        return {"violations": [], "kind": "retrial"}, "parameter checks", {}, [], EXIT_OK
    violations = model.validate_model(spec)
    res = {"violations": [{"rule": v.rule, "message": v.message} for v in violations], "kind": "model"}
    return res, "rule checks", {"equality": model.EQ_TOL}, [], EXIT_MODEL if violations else EXIT_OK


def cmd_stability(cfg: RunConfig):
    p, _ = load_any(cfg.model_path)
    if isinstance(p, retrial.RetrialParams):
        s = retrial.retrial_summary(p)
        return {"stable": s.stable, "rho_hat": s.rho_hat, "pi_empty": s.pi_empty,
                "pi_phase": s.pi_phase}, "retrial closed form", {}, [], EXIT_OK
    spec, net = _require_spec(cfg)
    summ = stability.stability_summary(spec)
    res = summ.to_dict()
    if net is not None:
        left, p0, ok = stability.network_stability(net)
        res["network"] = {"load": left, "operating_fraction": p0, "stable": ok}
    if model.is_symmetric(spec) and spec.is_qbd() and spec.n_phases:
        try:
            res["symmetric_rho"] = symmetric.symmetric_moments(spec).rho
        except stability.UnstableError:
            res["symmetric_rho"] = None
    tol = {"limit_eps": list(stability.LIMIT_EPS), "limit_spread": stability.LIMIT_SPREAD}
    return res, "Pi0(0,0) limit along the K zero curve", tol, [], EXIT_OK


def _psa_rows(v1, v2, totals, ws, M, pade):
    e1 = psa.moment_coefficients(v1, totals, 1)
    e2 = psa.moment_coefficients(v2, totals, 2)
    approx = None
    if pade is not None:
        approx = (psa.pade_from_series(e1, *pade), psa.pade_from_series(e2, *pade))
    rows = []
    for w in ws:
        r = [w, M, float(np.polynomial.polynomial.polyval(w, e1)), float(np.polynomial.polynomial.polyval(w, e2))]
        if approx:
            r += [float(approx[0](w)), float(approx[1](w))]
        rows.append(r)
    return rows, e1, e2, approx


def cmd_psa(cfg: RunConfig):
    spec, _ = _require_spec(cfg)
    M, ws, pade = cfg.options["M"], cfg.options["w"] or [spec.w], cfg.options["pade"]
    if pade and sum(pade) > M:
        raise ConfigError(f"Pade [{pade[0]}/{pade[1]}] needs order >= {sum(pade)}")
    summ = stability.stability_summary(spec)
    if not summ.stable:
        raise stability.UnstableError(f"model is unstable: Pi0(0,0) limit {summ.pi0_origin:.6g} <= 0")
    series = psa.solve_model_psa(spec, M, cfg.options["grid"])
    totals = psa.phase_totals(spec)
    v1, v2 = psa.psa_moment_series(spec, M, series=series)
    rows, e1, e2, approx = _psa_rows(v1, v2, totals, ws, M, pade)
    header = ["w", "M", "E_X1", "E_X2"] + (["pade_E_X1", "pade_E_X2"] if approx else [])
    out = cfg.output_path
    arts = [write_csv(out / "psa.csv", header, rows)]
    arts.append(plotting.plot_means([r[0] for r in rows], [r[2] for r in rows], [r[3] for r in rows], _figure_path(cfg, "psa")))
    res = {
        "M": M, "e1": e1, "e2": e2, "V_at_one": series.at_one, "V_at_origin": series.at_origin,
        "noise": series.noise(), "rows": rows,
    }
    if approx:
        res["pade"] = {"E_X1": approx[0].to_dict(), "E_X2": approx[1].to_dict(),
                       "pole_free": [a.pole_free_on_unit_interval() for a in approx]}
    tol = {"root_residual": psa.ROOT_RESIDUAL, "root_radius": psa.ROOT_RADIUS, "grid": cfg.options["grid"]}
    return res, "power series in w on an FFT torus", tol, arts, EXIT_OK


def cmd_symmetric(cfg: RunConfig):
    spec, _ = _require_spec(cfg)
    try:
        sm = symmetric.symmetric_moments(spec)
    except ValueError as exc:
        raise ModelError(str(exc)) from exc
    return sm.to_dict(), "diagonal expansion of the functional equation", {}, [], EXIT_OK


def cmd_retrial(cfg: RunConfig):
    p, _ = load_any(cfg.model_path)
    if not isinstance(p, retrial.RetrialParams):
        raise ConfigError("retrial expects retrial parameters (lambda0, ..., N)")
    summ = retrial.retrial_summary(p)
    res = {"summary": summ.to_dict()}
    arts = []
    if summ.stable:
        M, ws = cfg.options["M"], cfg.options["w"] or [p.w]
        rp = retrial.retrial_psa(p, M, min(cfg.options["grid"], 256))
        rows = [[w, M, *rp.means(w, M)] for w in ws]
        res.update({"e1": rp.e1, "e2": rp.e2, "mass": rp.mass, "rows": rows})
        arts.append(write_csv(cfg.output_path / "retrial.csv", ["w", "M", "E_X1", "E_X2"], rows))
        arts.append(plotting.plot_means(ws, [r[2] for r in rows], [r[3] for r in rows], _figure_path(cfg, "retrial"), "mean orbit length"))
    return res, "closed-form phase balance and power series in w", {"root_residual": psa.ROOT_RESIDUAL}, arts, EXIT_OK


def _oracle_solve(cfg: RunConfig, m):
    if cfg.options["trunc"]:
        L1, L2 = cfg.options["trunc"]
        return oracle.stationary(m, L1, L2), None
    ref = oracle.refine_truncation(m, "mean_x1", cfg.options["tol"])
    return ref.result, ref.history


def cmd_oracle(cfg: RunConfig):
    m, _ = load_any(cfg.model_path)
    if not isinstance(m, retrial.RetrialParams):
        m, _ = _require_spec(cfg)
    r, history = _oracle_solve(cfg, m)
    path = cfg.output_path / "oracle.csv"
    r.export_csv(path)
    res = {
        "L1": r.L1, "L2": r.L2, "mean_x1": r.mean_x1, "mean_x2": r.mean_x2, "pi00": r.pi00,
        "phase_occupancy": r.phase_occupancy, "boundary_mass": r.boundary_mass,
        "residual": r.residual, "solver": r.method, "history": history,
    }
    return res, "truncated CTMC stationary solve", {"refine": cfg.options["tol"]}, [path], EXIT_OK


def cmd_simulate(cfg: RunConfig):
    m, _ = load_any(cfg.model_path)
    if not isinstance(m, retrial.RetrialParams):
        m, _ = _require_spec(cfg)
    cap = cfg.options["trunc"][0] if cfg.options["trunc"] else 200
    est = oracle.simulate(m, cfg.options["horizon"], cfg.options["seed"], level_cap=cap)
    res = {
        "mean_x1": est.mean_x1, "mean_x2": est.mean_x2, "half_x1": est.half_x1, "half_x2": est.half_x2,
        "phase_occupancy": est.phase_occupancy, "events": est.events, "level_cap": cap,
    }
    return res, "exact-jump simulation, batch means", {"confidence": 0.95, "batches": est.n_batches}, [], EXIT_OK


def cmd_curves(cfg: RunConfig):
    spec, _ = _require_spec(cfg)
    n = cfg.options["samples"]
    kz = stability.kernel_zero_curves(spec, n)
    sc = stability.solve_s_curve(spec, n)
    out = cfg.output_path
    rows = []
    for s, g, r in zip(kz.s, kz.g, kz.residual):
        rows.append(["kernel", s.real, s.imag, g.real, g.imag, (g * s).real, (g * s).imag, (g / s).real, (g / s).imag, abs(r)])
    for y, s in zip(sc.y, sc.s):
        rows.append(["s_of_y", y.real, y.imag, s.real, s.imag, "", "", "", "", ""])
    header = ["curve", "arg_re", "arg_im", "val_re", "val_im", "S1_re", "S1_im", "S2_re", "S2_im", "residual"]
    arts = [write_csv(out / "curves.csv", header, rows)]
    arts.append(plotting.plot_curves(kz.s, kz.g, sc.s, _figure_path(cfg, "curves")))
    res = {
        "max_residual": float(np.max(np.abs(kz.residual))),
        "self_intersections_S1": kz.self_intersections(),
        "s_prime_at_one": sc.s_prime_1,
    }
    return res, "Newton continuation on the unit circle", {"residual": 1e-10}, arts, EXIT_OK


def reproduce_fig7(cfg: RunConfig, ws=None, orders=FIG7_ORDERS):
    """E(X2) against w for the reference network, one row per (w, M)."""
    ws = ws or cfg.options["w"] or parse_w("0:1:0.01")
    spec = model.build_network_model(model.table1_params())
    Mmax = max(orders)
    series = psa.solve_model_psa(spec, Mmax, cfg.options["grid"])
    totals = psa.phase_totals(spec)
    e2 = psa.moment_coefficients(series.v2, totals, 2)
    rows = [[w, M, float(np.polynomial.polynomial.polyval(w, e2[: M + 1]))] for M in orders for w in ws]
    (_, w0_e2), _ = psa.w_boundary_closed_form(spec, "w0", cfg.options["grid"])
    (_, w1_e2), _ = psa.w_boundary_closed_form(spec, "w1", cfg.options["grid"])
    arts = [write_csv(cfg.output_path / "fig7.csv", ["w", "M", "E_X2"], rows)]
    pade_rows = None
    res = {"w0_closed_form_E_X2": w0_e2, "w1_closed_form_E_X2": w1_e2, "e2": e2}
    if cfg.options["pade"]:
        L, K = cfg.options["pade"]
        if L + K > Mmax:
            raise ConfigError(f"Pade [{L}/{K}] needs order >= {L + K}")
        ap = psa.pade_from_series(e2, L, K)
        pade_rows = [[w, float(ap(w))] for w in ws]
        arts.append(write_csv(cfg.output_path / "fig7_pade.csv", ["w", "pade_E_X2"], pade_rows))
        res["pade"] = ap.to_dict()
    arts.append(plotting.plot_truncation(rows, _figure_path(cfg, "fig7"), pade_rows))
    return res, "PSA truncations for the reference network", {"grid": cfg.options["grid"]}, arts, EXIT_OK


def _fig9_row(lam, gamma, grid, tol):
    spec = model.build_network_model(model.table2_params(lam, gamma))
    explicit = symmetric.symmetric_moments(spec).M1
    series = psa.solve_model_psa(spec, 20, grid)
    totals = psa.phase_totals(spec)
    m10 = psa.truncated_moment(series.v1, totals, spec.w, 10, 1)
    m20 = psa.truncated_moment(series.v1, totals, spec.w, 20, 1)
    ref = oracle.refine_truncation(spec, "mean_x1", tol)
    return [lam, explicit, m10, m20, ref.value]


def reproduce_fig9(cfg: RunConfig, lambdas=FIG9_LAMBDAS):
    """Explicit, PSA and CTMC mean queue length over the reference symmetric arrival rates."""
    gamma, grid, tol = cfg.options["gamma"], cfg.options["grid"], cfg.options["tol"]
    rows = _map(lambda lam: _fig9_row(lam, gamma, grid, tol), lambdas)
    arts = [write_csv(cfg.output_path / "fig9.csv", ["lambda", "M1_explicit", "M1_psa_M10", "M1_psa_M20", "M1_oracle"], rows)]
    arts.append(plotting.plot_explicit_vs_psa(rows, _figure_path(cfg, "fig9")))
    return {"gamma": gamma, "rows": rows}, "explicit moments, PSA at w = 1/2 and CTMC", {"refine": tol, "grid": grid}, arts, EXIT_OK


def cmd_reproduce(cfg: RunConfig):
    return (reproduce_fig7 if cfg.options["target"] == "fig7" else reproduce_fig9)(cfg)


HANDLERS = {
    "validate": cmd_validate, "stability": cmd_stability, "psa": cmd_psa, "symmetric": cmd_symmetric,
    "retrial": cmd_retrial, "oracle": cmd_oracle, "simulate": cmd_simulate, "curves": cmd_curves,
    "reproduce": cmd_reproduce,
}


def _emit(cfg: RunConfig, env: dict) -> None:
    text = json.dumps(env, indent=2)
    print(text)
    try:
        (cfg.output_path / f"{cfg.command}.json").write_text(text + "\n")
    except OSError:
        pass


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    try:
        cfg.output_path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(json.dumps({"status": "config_error", "error": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    try:
        res, method, tol, arts, code = HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        _emit(cfg, envelope(cfg, "config_error", {"error": str(exc)}, "none", {}))
        return EXIT_CONFIG
    except ModelError as exc:
        _emit(cfg, envelope(cfg, "model_error", {"error": str(exc)}, "none", {}))
        return EXIT_MODEL
    except NUMERIC_ERRORS as exc:
        diag = {"error": str(exc), "type": type(exc).__name__}
        _emit(cfg, envelope(cfg, "numeric_error", diag, "none", {}))
        return EXIT_NUMERIC
    status = "ok" if code == EXIT_OK else "model_error"
    _emit(cfg, envelope(cfg, status, res, method, tol, arts))
    return code


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:  # usage errors are configuration errors, --help is success
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = config_from_args(ns)
    except ConfigError as exc:
        print(json.dumps({"status": "config_error", "error": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
