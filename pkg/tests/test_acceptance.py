"""Acceptance criteria, one test and one summary line each."""

import time

import numpy as np
import pytest

from qcoupled import model, oracle, psa, retrial, stability, symmetric

pytestmark = pytest.mark.slow

W_GRID = np.round(np.arange(0, 101) * 0.01, 12)


def scaled(p, c):
    return p.replace(lam=tuple((a * c, b * c) for a, b in p.lam))


def test_1_priority_correspondence(report):
    t0 = time.perf_counter()
    spec = model.build_network_model(model.table1_params(lam0=(1.0, 0.8)))
    series = psa.solve_model_psa(spec, 0)
    v1, v2 = psa.psa_moment_series(spec, 0, series=series)
    totals = psa.phase_totals(spec)
    m0 = np.array([psa.truncated_moment(v2, totals, w, 0, 2) for w in W_GRID[:-1]])
    m0 = np.append(m0, np.polynomial.polynomial.polyval(1.0, psa.moment_coefficients(v2, totals, 2)))
    pi00 = stability.pi0_origin(spec.with_w(0.0))
    (_, closed), mass = psa.w_boundary_closed_form(spec, "w0", pi00=pi00)
    err = float(np.max(np.abs(m0 - closed)))
    elapsed = time.perf_counter() - t0
    ok = err < 1e-6 and elapsed < 10
    report(1, ok, f"max |E_M=0(X2) - closed form| = {err:.2e} (tol 1e-6) over {len(W_GRID)} w values; "
                  f"closed-form mass {mass:.10f}; {elapsed:.1f} s (limit 10 s)")
    assert ok


NETWORKS = {
    "table1": model.table1_params(),
    "table1 x1.5 load": scaled(model.table1_params(), 1.5),
    "table2 lam=0.5 gamma=1": model.table2_params(0.5, 1.0),
    "asymmetric service": model.table1_params().replace(nu=(4.0, 7.0), r12=0.1, r21=0.4),
    "single failure mode": model.table1_params().replace(lam=((0.8, 1.0), (0.3, 0.3)), gamma=(0.4,), tau=(4.0,)),
}


def test_2_psa_oracle_agreement(report):
    t0 = time.perf_counter()
    worst, lines = 0.0, []
    for name, p in NETWORKS.items():
        spec = model.build_network_model(p)
        series = psa.solve_model_psa(spec, 10)
        totals = psa.phase_totals(spec)
        for w in (0.02, 0.05, 0.1):
            sw = spec.with_w(w)
            v1, v2 = psa.psa_moment_series(sw, 10, series=series)
            ref = oracle.refine_truncation(sw, "mean_x1", 1e-4)
            r = ref.result
            e1 = abs(psa.truncated_moment(v1, totals, w, 10, 1) / r.mean_x1 - 1)
            e2 = abs(psa.truncated_moment(v2, totals, w, 10, 2) / r.mean_x2 - 1)
            worst = max(worst, e1, e2)
            lines.append(f"{name} w={w}: {max(e1, e2):.1e} (L={ref.L1})")
    elapsed = time.perf_counter() - t0
    ok = worst < 0.02 and elapsed < 300
    report(2, ok, f"worst relative error {worst:.2e} (tol 2e-2) over 5 instances x 3 w; {elapsed:.0f} s (limit 300 s)")
    print("\n".join(lines))
    assert ok


def test_3_symmetric_closed_form(report):
    rows, m1_ok, psa_ok = [], True, True
    for gamma in (0.5, 1.0):
        for lam in (0.2, 0.5, 0.8, 1.1):
            spec = model.build_network_model(model.table2_params(lam, gamma))
            explicit = symmetric.symmetric_moments(spec).M1
            ref = oracle.refine_truncation(spec, "mean_x1", 1e-6).value
            rel = abs(explicit / ref - 1)
            m1_ok &= rel < 5e-3
            line = f"lam={lam} gamma={gamma}: explicit M1 rel err {rel:.2e}"
            if lam == 1.1:
                series = psa.solve_model_psa(spec, 20)
                totals = psa.phase_totals(spec)
                e10 = abs(psa.truncated_moment(series.v1, totals, 0.5, 10, 1) - ref)
                e20 = abs(psa.truncated_moment(series.v1, totals, 0.5, 20, 1) - ref)
                psa_ok &= e20 <= e10
                line += f"; PSA |err| M=10 {e10:.2e}, M=20 {e20:.2e}"
            rows.append(line)
    ok = m1_ok and psa_ok
    report(3, ok, f"explicit M1 within 0.5%: {'yes' if m1_ok else 'no'}; PSA M=20 <= M=10 at lam=1.1: "
                  f"{'yes' if psa_ok else 'no'} :: " + " | ".join(rows))
    assert ok


RETRIAL = [
    retrial.RetrialParams(0.2, 0.2, 0.2, 1.0, 1.0, 1.0, 2),
    retrial.RetrialParams(0.3, 0.1, 0.15, 1.2, 1.5, 0.8, 5),
    retrial.RetrialParams(0.1, 0.25, 0.1, 1.0, 2.0, 1.0, 3, w=0.3),
    retrial.RetrialParams(0.4, 0.05, 0.1, 1.5, 0.7, 1.2, 4, w=0.8),
]


def test_4_retrial_closed_forms(report):
    worst, lines = 0.0, []
    for p in RETRIAL:
        s = retrial.retrial_summary(p)
        r = oracle.refine_truncation(p, "mean_x1", 1e-5).result
        occ = r.phase_occupancy
        e_empty = abs(s.pi_empty - r.pi00)
        e_phase = float(np.max(np.abs(s.pi_phase - occ)))
        geometric = float(np.max(np.abs(occ[2:] - p.rho0 * occ[1:-1])))
        e_sum = abs(s.pi_phase.sum() - 1)
        worst = max(worst, e_empty, e_phase, geometric, e_sum)
        lines.append(f"N={p.N} w={p.w}: Pi0(0,0) {e_empty:.1e}, Pi_k(1,1) {e_phase:.1e}, geometric {geometric:.1e}")
    ok = worst < 1e-3
    report(4, ok, f"worst deviation {worst:.2e} (tol 1e-3) on 4 instances (N=2,5,3,4) :: " + " | ".join(lines))
    assert ok


def test_5_root_and_kernel_certificates(report):
    worst_G, worst_Y, worst_res, worst_sym = 0.0, 0.0, 0.0, 0.0
    for spec in (model.build_network_model(model.table1_params()), model.build_network_model(model.table2_params(0.8, 1.0))):
        feq = psa.model_feq(spec)
        xs = np.exp(1j * (2 * np.pi * np.arange(64) / 64 + np.pi / 64))
        Y = psa.roots_in_disc(feq, xs)
        worst_G = max(worst_G, float(np.max(np.abs(feq.residual_G(xs, Y)))))
        worst_Y = max(worst_Y, float(np.max(np.abs(Y))))
        kz = stability.kernel_zero_curves(spec, 128)
        g, n = kz.g, len(kz.g)
        worst_res = max(worst_res, float(np.max(kz.residual)))
        worst_sym = max(
            worst_sym,
            abs(g[0] - 1),
            float(np.max(np.abs(g[n // 2:] + g[: n // 2]))),
            float(np.max(np.abs(g[1:] - np.conj(g[1:][::-1])))),
        )
    ok = worst_G < 1e-10 and worst_Y < 1 and worst_res < 1e-10 and worst_sym < 1e-9
    report(5, ok, f"|G(x,Y)| {worst_G:.1e} (<1e-10), max|Y| {worst_Y:.6f} (<1), |g^2-psi| {worst_res:.1e} (<1e-10), "
                  f"g(1)/odd/conjugate {worst_sym:.1e} (<1e-9)")
    assert ok


BATTERY = (1.0, 1.5, 1.8, 1.9, 2.0, 2.25, 2.4, 2.7, 3.2, 4.0)


def test_6_stability_equivalence(report):
    base = model.table1_params()
    agree, lines = True, []
    for c in BATTERY:
        p = scaled(base, c)
        spec = model.build_network_model(p)
        left, p0, sta1 = stability.network_stability(p)
        lm = stability.stability_summary(spec).stable
        esc, masses = oracle.escaping_mass_verdict(spec)
        agree &= sta1 == lm == esc
        lines.append(f"x{c}: load/p0 {left / p0:.3f} -> {sta1}/{lm}/{esc}")
    n_stable = sum(stability.network_stability(scaled(base, c))[2] for c in BATTERY)
    report(6, agree, f"verdicts (network condition / Pi0(0,0) sign / escaping mass) agree on {len(BATTERY)} "
                     f"instances, {n_stable} stable :: " + " | ".join(lines))
    assert agree


def test_7_normalisation(report):
    specs = [model.build_network_model(model.table1_params()), model.build_network_model(model.table2_params(0.5, 0.5))]
    analytic = max(abs(stability.phase_probabilities(s).sum() - 1) for s in specs)
    analytic = max(analytic, max(abs(retrial.retrial_summary(p).pi_phase.sum() - 1) for p in RETRIAL))
    psa_err = 0.0
    for s in specs:
        series = psa.solve_model_psa(s, 15)
        norm = psa.phase_totals(s).norm
        for w in (0.1, 0.3, 0.5):
            psa_err = max(psa_err, abs(np.polynomial.polynomial.polyval(w, series.at_one) * norm - 1))
    oracle_err = max(abs(oracle.stationary(s, 30, 30).pi.sum() - 1) for s in specs)
    oracle_err = max(oracle_err, abs(oracle.stationary(RETRIAL[1], 30, 30).pi.sum() - 1))
    ok = analytic < 1e-12 and psa_err < 1e-8 and oracle_err < 1e-12
    report(7, ok, f"phase probabilities {analytic:.1e} (<1e-12), PSA M=15 partial sums {psa_err:.1e} (<1e-8), "
                  f"oracle vectors {oracle_err:.1e}")
    assert ok


COVERAGE = [
    ("retrial N=3", retrial.RetrialParams(0.1, 0.15, 0.1, 1.0, 1.0, 1.2, 3), 2e5),
    ("table1 network", model.build_network_model(model.table1_params()), 5e3),
]


def test_8_simulation_coverage(report):
    cap, lines, ok = 40, [], True
    for name, m, horizon in COVERAGE:
        ref = oracle.stationary(m, cap, cap)
        hits = sum(oracle.simulate(m, horizon, seed=s, level_cap=cap).covers(x1=ref.mean_x1) for s in range(100))
        ok &= hits >= 93
        lines.append(f"{name}: {hits}/100 (horizon {horizon:g})")
    report(8, ok, "95% CI covers truncated-CTMC E(X1) (need >= 93/100) :: " + " | ".join(lines))
    assert ok
