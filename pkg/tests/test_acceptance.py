"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line (also collected in the terminal summary).
Engine results are cached per charge so shared points are computed once.
"""

import math
import time
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
import pytest

from conftest import record
from critq.basis import BasisFunction, BasisLayout, BasisSet, ParameterBox, generate_basis
from critq.branch import FIT_FOUND, NO_FIT, BranchPairModel, branch_pair_expand, branch_pair_search
from critq.dataio import bundled_path, ingest_csv, ingest_tail, plot_data, series_to_csv, \
    parse_energy_csv
from critq.engine import GROUND_LAYOUT, SpectralConfig, excited_energy, ground_energy
from critq.hamiltonian import assemble, kinetic_element, operator_matrices
from critq.integrals import ExponentTriple, PowerTriple, gamma_integral, quadrature_oracle
from critq.puiseux import (FREE_CONSTANT, STANDARD_EXPONENTS, THRESHOLD_LOCKED, PuiseuxModel,
                           eval_model, fit_puiseux, sample_model)
from critq.series import EnergySeries
from critq.spectral import solve_generalized
from critq.xispace import en_large_n, to_xi_space

NINE = [0.95, 1.0, 1.05, 1.1, 1.15, 1.2, 1.25, 1.3, 1.35]
EXCITED_GRID = [round(1.05 + 0.05 * k, 2) for k in range(12)]
TABLE1 = {0.95: -0.462124684391, 1.15: -0.756014315641, 1.25: -0.933575272295,
          1.3: -1.029896662309}
GROUND_PRINTED = PuiseuxModel.threshold_locked(
    0.91085, STANDARD_EXPONENTS, (-1.142552, -0.174110, -0.7700097, -0.1399230, 0.0224694, 0.0087298))
THREE_E_PRINTED = PuiseuxModel(2.009, STANDARD_EXPONENTS[:4],
                               (-2.934278, -3.390491, -0.114813, -1.102097), FREE_CONSTANT)
RADIUS_MAX = 1 / 0.91085


@lru_cache(maxsize=None)
def ground(Z):
    return ground_energy(Z, SpectralConfig())


@lru_cache(maxsize=None)
def excited(Z):
    return excited_energy(Z, SpectralConfig())


def sig_digits_ok(value, reference, k):
    """Agreement to k significant digits: relative error below 5 * 10**-k."""
    return abs(value - reference) < 5 * 10.0 ** (-k) * abs(reference)


def printed_digits_ok(value, printed: str):
    decimals = len(printed.split(".")[1])
    return f"{value:.{decimals}f}" == printed


def test_criterion_01_integral_oracle():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        p = PowerTriple(*(int(x) for x in rng.integers(0, 5, 3)))
        e = ExponentTriple(*rng.uniform(0.2, 8.0, 3))
        exact = float(gamma_integral(p, e))
        worst = max(worst, abs(quadrature_oracle(p, e, 1e-10) - exact) / exact)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed <= 300
    assert record(1, ok, f"500 cases, worst relative diff {worst:.2e} (tol 1e-8), {elapsed:.0f} s")


def test_criterion_02_hydrogenic_quotient():
    rng = np.random.default_rng(7)
    worst = 0.0
    box = BasisLayout.single(ParameterBox(0.5, 4, 0.5, 4, 0, 1))
    for _ in range(20):
        Z, zp = rng.uniform(0.5, 4.0, 2)
        H, S = assemble(BasisSet((BasisFunction(zp, zp, 0.0),), 0, box), Z)
        q = float(H[0, 0].mid()) / float(S[0, 0].mid())
        ref = zp ** 2 - 2 * Z * zp + 5 * zp / 8
        worst = max(worst, abs(q - ref) / abs(ref))
    H, S = assemble(BasisSet((BasisFunction(2, 2, 0),), 0, box), 2.0)
    exact = H[0, 0] / S[0, 0] == -2.75
    ok = worst < 1e-14 and exact
    assert record(2, ok, f"20 pairs worst relative diff {worst:.1e}; Z=Z'=2 quotient exactly -2.75: {exact}")


@pytest.mark.slow
def test_criterion_03_reference_ground_energies():
    lines, ok = [], True
    t0 = time.perf_counter()
    for Z, ref in TABLE1.items():
        p = ground(Z)
        good = abs(p.E - ref) <= 5e-9 and p.basis_size <= 600
        ok &= good
        lines.append(f"Z={Z}: {p.E:.12f} vs {ref} (diff {p.E - ref:+.1e}, est {p.est_error:.0e})")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 1800
    assert record(3, ok, "; ".join(lines) + f"; N<=600, {elapsed:.0f} s")


@pytest.mark.slow
def test_criterion_04_critical_charge_two_electron():
    data = EnergySeries(tuple(ground(z) for z in NINE), "ground")
    fit = fit_puiseux(data, STANDARD_EXPONENTS, THRESHOLD_LOCKED, (0.85, 0.95))
    b1, b32 = fit.coefficients[1], fit.coefficients[2]
    main_ok = (0.9104 <= fit.z_cr <= 0.9114 and abs(b1 / -1.142552 - 1) <= 0.01
               and abs(b32 / -0.174110 - 1) <= 0.10)
    synth = fit_puiseux(sample_model(GROUND_PRINTED, NINE), STANDARD_EXPONENTS, THRESHOLD_LOCKED,
                        (0.85, 0.95))
    fallback_ok = sig_digits_ok(synth.z_cr, 0.91085, 4) and all(
        sig_digits_ok(a, b, 4) for a, b in zip(synth.coefficients[1:], GROUND_PRINTED.coefficients[1:]))
    assert record(4, main_ok, f"engine nine-point fit z_cr={fit.z_cr:.6f} (range [0.9104, 0.9114]), "
                              f"B1={b1:.6f}, B3/2={b32:.6f}; fit-column fallback "
                              f"{'ok' if fallback_ok else 'failed'}")


def test_criterion_05_fit_columns():
    t1 = ingest_csv(bundled_path("table1_2e.csv"))
    t3 = ingest_csv(bundled_path("table3_3e.csv"))
    printed1 = {0.95: "-0.462124684", 1.15: "-0.756014316", 1.25: "-0.933575273", 1.3: "-1.029896664"}
    printed3 = {2.02: "-2.97184", 2.075: "-3.1647979", 2.10: "-3.25509091", 2.16: "-3.47810790"}
    bad = [z for z in t1.Z if not printed_digits_ok(eval_model(GROUND_PRINTED, z), printed1[z])]
    bad += [z for z in t3.Z if not printed_digits_ok(eval_model(THREE_E_PRINTED, z), printed3[z])]
    assert record(5, not bad, f"8 printed fit values reproduced; mismatches: {bad or 'none'}")


def test_criterion_06_large_order_coefficients():
    xi = to_xi_space(GROUND_PRINTED)
    targets = {20: (-0.71492e-5, 4), 100: (-0.689e-10, 3), 200: (-1.065e-15, 3), 300: (-3.396e-20, 3)}
    t0 = time.perf_counter()
    vals = {n: en_large_n(xi, n) for n in targets}
    elapsed = time.perf_counter() - t0
    ok = all(sig_digits_ok(vals[n], ref, k) for n, (ref, k) in targets.items()) and elapsed < 1
    detail = ", ".join(f"n={n}: {vals[n]:.4e}" for n in targets)
    assert record(6, ok, f"{detail} ({elapsed * 1e3:.1f} ms)")


@pytest.mark.slow
def test_criterion_07_three_electron_pipeline():
    data = ingest_csv(bundled_path("table3_3e.csv"))
    fixed = fit_puiseux(data, STANDARD_EXPONENTS[:4], FREE_CONSTANT, (2.009, 2.009))
    rel = max(abs(a / b - 1) for a, b in zip(fixed.coefficients, THREE_E_PRINTED.coefficients))
    e2 = ground(2.009).E
    gap = abs(eval_model(fixed, 2.009) - e2)
    synth = fit_puiseux(sample_model(THREE_E_PRINTED, [2.02, 2.03, 2.07, 2.08, 2.10, 2.12, 2.16]),
                        STANDARD_EXPONENTS[:4], FREE_CONSTANT, (1.95, 2.05))
    params = (synth.z_cr,) + synth.coefficients
    truth = (2.009,) + THREE_E_PRINTED.coefficients
    synth_rel = max(abs(a / b - 1) for a, b in zip(params, truth))
    ok = rel <= 5e-3 and gap <= 1e-5 and synth_rel <= 1e-6
    assert record(7, ok, f"fixed-z_cr coefficients within {rel:.1e} (tol 5e-3); "
                         f"|E3e_fit(2.009) - E2e(2.009)| = {gap:.1e} (tol 1e-5); "
                         f"synthetic five-parameter recovery {synth_rel:.1e}")


@pytest.mark.slow
def test_criterion_08_excited_state(tmp_path):
    exc = EnergySeries(tuple(excited(z) for z in EXCITED_GRID), "excited")
    fit = fit_puiseux(exc, STANDARD_EXPONENTS, THRESHOLD_LOCKED, (0.98, 1.10))
    grd = EnergySeries(tuple(ground(z) for z in EXCITED_GRID), "ground")
    path = tmp_path / "curves.dat"
    path.write_text(plot_data({"ground": list(zip(grd.Z, grd.E)), "excited": list(zip(exc.Z, exc.E))}))
    blocks, cur = {}, None
    for ln in path.read_text().splitlines():
        if ln.startswith("# series:"):
            cur = blocks.setdefault(ln.split(":")[1].strip(), [])
        elif ln and not ln.startswith("#"):
            cur.append(tuple(float(x) for x in ln.split()))
    below = all(g[1] < e[1] for g, e in zip(blocks["ground"], blocks["excited"]))
    ok = 1.00 <= fit.z_cr <= 1.04 and below
    assert record(8, ok, f"excited fit z_cr={fit.z_cr:.4f} (range [1.00, 1.04]); "
                         f"ground below excited at all {len(EXCITED_GRID)} charges: {below}")


def test_criterion_09_branch_pair():
    tail = ingest_tail(bundled_path("table2_en_reference.csv"), "baker")
    model, report = branch_pair_search(tail, RADIUS_MAX)
    truth = BranchPairModel(0.3, 0.8, -0.02, 0.005)
    c = branch_pair_expand(truth, 40)
    found, rt = branch_pair_search([(n, float(c[n])) for n in range(21, 33)], RADIUS_MAX)
    err = max(abs(getattr(found, k) / getattr(truth, k) - 1) for k in ("a", "b", "A1", "A2"))
    synth_ok = rt.verdict == FIT_FOUND and err <= 0.01
    ok = report.verdict == NO_FIT and synth_ok
    assert record(9, ok, f"reference tail verdict {report.verdict} (max misfit {report.max_misfit:.1e}, "
                         f"r={model.r:.4f}); synthetic verdict {rt.verdict}, parameter error {err:.1e}")


def test_criterion_10_property_suites():
    checks = {}
    ops = operator_matrices(generate_basis(GROUND_LAYOUT.scaled(2.0), 48, 5))
    prev, mono = None, True
    for n in (12, 24, 36, 48):
        sub = ops.leading(n)
        ev = solve_generalized(sub.hamiltonian(2.0), sub.overlap, k=2).eigenvalues
        if prev is not None:
            mono &= ev[0] <= prev[0] and ev[1] <= prev[1]
        prev = ev
    checks["nested monotonicity"] = mono

    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        f = BasisFunction(*rng.uniform((0.2, 0.1, -0.05), (6, 4, 1.5)))
        g = BasisFunction(*rng.uniform((0.2, 0.1, -0.05), (6, 4, 1.5)))
        lap = _laplacian_kinetic(f, g)
        worst = max(worst, float(abs(kinetic_element(f, g, 160) - lap) / abs(lap)))
    checks[f"gradient vs Laplacian kinetic ({worst:.0e})"] = worst < 1e-10

    fit = fit_puiseux(sample_model(GROUND_PRINTED, NINE), STANDARD_EXPONENTS, THRESHOLD_LOCKED,
                      (0.85, 0.95))
    checks["fit round-trip"] = abs(fit.z_cr - 0.91085) < 1e-6

    s = EnergySeries.from_pairs(rng.uniform(1, 2, 10).cumsum(), rng.normal(-1, 1, 10))
    text = series_to_csv(s)
    back = parse_energy_csv(text)
    checks["file round-trip"] = back.Z == s.Z and back.E == s.E and series_to_csv(back) == text
    ok = all(checks.values())
    assert record(10, ok, ", ".join(f"{k}: {'ok' if v else 'FAILED'}" for k, v in checks.items()))


def _laplacian_kinetic(f, g, prec=160):
    def direct(f, g):
        A, B, C = f.alpha + g.alpha, f.beta + g.beta, f.a + g.a
        al, be, ga = (mpmath.mpf(x) for x in (g.alpha, g.beta, g.a))

        def G(l, m, n):
            return gamma_integral((l, m, n), (A, B, C), prec)
        e1 = (al ** 2 + ga ** 2) * G(1, 1, 1) - 2 * al * G(0, 1, 1) - 2 * ga * G(1, 1, 0) \
            + al * ga * (G(2, 1, 0) + G(0, 1, 2) - G(0, 3, 0))
        e2 = (be ** 2 + ga ** 2) * G(1, 1, 1) - 2 * be * G(1, 0, 1) - 2 * ga * G(1, 1, 0) \
            + be * ga * (G(1, 2, 0) + G(1, 0, 2) - G(3, 0, 0))
        return -(e1 + e2) / 2
    with mpmath.workprec(prec):
        return direct(f, g) + direct(f, g.swapped())
