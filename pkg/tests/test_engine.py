import math

import mpmath
import numpy as np
import pytest

from critq.basis import (BasisFunction, BasisLayout, BasisSet, ParameterBox, check_distinct,
                         functions_from_arrays, generate_basis)
from critq.engine import (GROUND_LAYOUT, SpectralConfig, excited_energy, ground_energy,
                          level_energy, optimize_box)
from critq.errors import (DuplicateFunctionError, IllConditionedError, TrustRangeError,
                          ValidationError)
from critq.hamiltonian import (assemble, kinetic_element, operator_matrices, overlap_element,
                               potential_element)
from critq.integrals import gamma_integral
from critq.spectral import solve_generalized

BOX = ParameterBox(0.3, 3.0, 0.2, 2.5, -0.1, 0.8)


def _laplacian_direct(f, g, prec):
    """-1/2 <f| lap1 + lap2 |g> for unsymmetrized exponentials, measure r1 r2 r12."""
    A, B, C = f.alpha + g.alpha, f.beta + g.beta, f.a + g.a
    al, be, ga = (mpmath.mpf(x) for x in (g.alpha, g.beta, g.a))

    def G(l, m, n):
        return gamma_integral((l, m, n), (A, B, C), prec)

    e1 = (al ** 2 + ga ** 2) * G(1, 1, 1) - 2 * al * G(0, 1, 1) - 2 * ga * G(1, 1, 0) \
        + al * ga * (G(2, 1, 0) + G(0, 1, 2) - G(0, 3, 0))
    e2 = (be ** 2 + ga ** 2) * G(1, 1, 1) - 2 * be * G(1, 0, 1) - 2 * ga * G(1, 1, 0) \
        + be * ga * (G(1, 2, 0) + G(1, 0, 2) - G(3, 0, 0))
    return -(e1 + e2) / 2


def _laplacian_kinetic(f, g, prec=160):
    with mpmath.workprec(prec):
        return _laplacian_direct(f, g, prec) + _laplacian_direct(f, g.swapped(), prec)


def test_overlap_separable_example():
    for zp in (0.7, 1.0, 2.3):
        f = BasisFunction(zp, zp, 0.0)
        with mpmath.workprec(128):
            expect = 1 / (4 * mpmath.mpf(zp) ** 6)
        assert abs(overlap_element(f, f) / expect - 1) < 1e-30


def test_element_symmetry_and_exchange():
    rng = np.random.default_rng(0)
    for _ in range(20):
        f = BasisFunction(*rng.uniform((0.3, 0.2, -0.1), (3, 2.5, 0.8)))
        g = BasisFunction(*rng.uniform((0.3, 0.2, -0.1), (3, 2.5, 0.8)))
        assert overlap_element(f, g) == overlap_element(g, f)
        assert kinetic_element(f, g) == kinetic_element(g, f)
        assert potential_element(f, g, 1.3) == potential_element(g, f, 1.3)
    f, g = BasisFunction(1, 2, 0.3), BasisFunction(2, 1, 0.3)
    assert overlap_element(f, g) == overlap_element(f, f) == overlap_element(g, g)


def test_hydrogenic_expectations():
    zp = 1.7
    f = BasisFunction(zp, zp, 0.0)
    s = overlap_element(f, f)
    t = kinetic_element(f, f) / s
    v1 = potential_element(f, f, 1.0) / s
    v2 = potential_element(f, f, 2.0) / s
    attraction = v1 - v2  # affine in Z: slope is minus the attraction
    repulsion = v1 + attraction
    np.testing.assert_allclose(float(t), zp ** 2, rtol=1e-15)
    np.testing.assert_allclose(float(attraction), 2 * zp, rtol=1e-15)
    np.testing.assert_allclose(float(repulsion), 5 * zp / 8, rtol=1e-15)


def test_gradient_kinetic_matches_laplacian_form():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(120):
        f = BasisFunction(*rng.uniform((0.2, 0.1, -0.05), (6, 4, 1.5)))
        g = BasisFunction(*rng.uniform((0.2, 0.1, -0.05), (6, 4, 1.5)))
        grad = kinetic_element(f, g, prec=160)
        lap = _laplacian_kinetic(f, g)
        worst = max(worst, float(abs(grad - lap) / abs(lap)))
    assert worst < 1e-10


def test_hydrogenic_rayleigh_quotient():
    rng = np.random.default_rng(9)
    for _ in range(20):
        Z, zp = rng.uniform(0.5, 4, 2)
        basis = BasisSet((BasisFunction(zp, zp, 0.0),), 0, BasisLayout.single(BOX))
        H, S = assemble(basis, Z)
        q = _arb_float(H[0, 0]) / _arb_float(S[0, 0])
        np.testing.assert_allclose(q, zp ** 2 - 2 * Z * zp + 5 * zp / 8, rtol=1e-14)
        res = solve_generalized(H, S, 1)
        np.testing.assert_allclose(float(res.eigenvalues[0]), q, rtol=1e-14)
    basis = BasisSet((BasisFunction(2, 2, 0),), 0, BasisLayout.single(BOX))
    H, S = assemble(basis, 2.0)
    assert H[0, 0] / S[0, 0] == -2.75
    res = solve_generalized(H, S, k=1)
    assert abs(res.eigenvalues[0] + mpmath.mpf("2.75")) < mpmath.mpf(2) ** -120


def _arb_float(x):
    return float(x.mid())


def test_diagonal_generalized_problem():
    res = solve_generalized(np.diag([-3.0, -1.0, 2.0]), np.eye(3), k=2)
    assert [float(e) for e in res.eigenvalues] == [-3.0, -1.0]
    assert res.linear_coefficients.shape == (3, 2)
    with pytest.raises(ValidationError):
        solve_generalized(np.eye(2), np.eye(3), 1)


def test_matrices_symmetric_positive_diagonal():
    ops = operator_matrices(generate_basis(BOX, 12, seed=4))
    for m in (ops.overlap, ops.kinetic, ops.attraction, ops.repulsion):
        assert m == m.transpose()
    assert all(ops.overlap[i, i] > 0 for i in range(12))


def test_nested_bases_are_variational():
    layout = GROUND_LAYOUT.scaled(1.5)
    for seed in (0, 1, 2):
        ops = operator_matrices(generate_basis(layout, 60, seed))
        prev = None
        for n in (15, 30, 45, 60):
            sub = ops.leading(n)
            ev = solve_generalized(sub.hamiltonian(1.5), sub.overlap, k=2).eigenvalues
            if prev is not None:
                assert ev[0] <= prev[0] and ev[1] <= prev[1]
            prev = ev


def test_generate_basis_deterministic_and_in_box():
    a = generate_basis(BOX, 50, seed=7)
    b = generate_basis(BOX, 50, seed=7)
    assert a == b
    assert generate_basis(BOX, 50, seed=8) != a
    assert generate_basis(BOX, 20, seed=7).functions == a.functions[:20]
    assert len(generate_basis(BOX, 1, seed=7)) == 1
    al, be, ga = a.arrays()
    assert np.all((al >= BOX.alpha_lo) & (al <= BOX.alpha_hi))
    assert np.all((be >= BOX.beta_lo) & (be <= BOX.beta_hi))
    assert np.all((ga >= BOX.a_lo) & (ga <= BOX.a_hi))


def test_invalid_inputs():
    with pytest.raises(ValidationError):
        ParameterBox(1.0, 0.5, 0.2, 1.0, 0.0, 1.0).validate()
    with pytest.raises(ValidationError):
        ParameterBox(0.1, 1.0, 0.1, 1.0, -0.5, 0.5).validate()
    with pytest.raises(ValidationError):
        generate_basis(BOX, 0)
    with pytest.raises(DuplicateFunctionError):
        check_distinct([BasisFunction(1, 2, 0.3), BasisFunction(2, 1, 0.3)])
    with pytest.raises(TrustRangeError):
        ground_energy(0.5)
    with pytest.raises(ValidationError):
        excited_energy(1.5, level=1)


def test_precision_escalates_for_near_dependent_basis():
    base = np.array([1.3, 0.9, 0.2])
    steps = np.array([0.0, 1e-10, 2e-10, 3e-10])
    basis = functions_from_arrays(base[0] * (1 + steps), base[1] * (1 + 2 * steps), base[2] + steps)
    ops = operator_matrices(basis, 512)
    res = solve_generalized(ops.hamiltonian(1.3), ops.overlap, 1, precision_bits=128)
    assert res.precision_bits > 128
    assert res.overlap_condition_estimate > 2.0 ** 100
    ref = solve_generalized(ops.hamiltonian(1.3), ops.overlap, 1, precision_bits=512)
    assert abs(res.eigenvalues[0] - ref.eigenvalues[0]) < 1e-20
    with pytest.raises(IllConditionedError):
        solve_generalized(ops.hamiltonian(1.3), ops.overlap, 1, precision_bits=64,
                          max_precision_bits=64)


def test_excited_level_bounds():
    cfg = SpectralConfig(basis_size=80)
    g = ground_energy(2.0, cfg)
    e = excited_energy(2.0, cfg)
    assert g.E < e.E < -2.0
    np.testing.assert_allclose(g.E, -2.903724377, atol=1e-7)
    np.testing.assert_allclose(e.E, -2.145974046, atol=1e-5)


def test_energy_point_deterministic():
    cfg = SpectralConfig(basis_size=40, seed=3)
    assert ground_energy(1.5, cfg) == ground_energy(1.5, cfg)


def test_optimize_box_contract():
    init = ParameterBox(0.5, 4.0, 0.5, 4.0, 0.0, 1.0)
    assert optimize_box(2.0, 20, init, budget=5, initial_step=1e-4, min_step=1e-3) is init
    e0 = float(level_energy(2.0, init, 30))
    out = optimize_box(2.0, 30, init, budget=10)
    assert float(level_energy(2.0, out, 30)) <= e0
    with pytest.raises(ValidationError):
        optimize_box(2.0, 30, init, budget=0)


@pytest.mark.slow
def test_optimize_box_helium():
    init = ParameterBox(0.5, 4.0, 0.5, 4.0, 0.5, 4.0)
    out = optimize_box(2.0, 100, init, budget=80)
    assert float(level_energy(2.0, out, 100)) < -2.9037
