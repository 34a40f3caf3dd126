import random
from fractions import Fraction

import numpy as np
import pytest

from hyperkl.constructors import (catalog_group, conjugacy_hypergroup, direct_product,
                                  group_as_hypergroup, integers, z_cross_f)
from hyperkl.measure import Measure, random_measure
from hyperkl.operator import (MonotonicityError, NonConverged, PreconditionError,
                              bilateral_shift_check, decompose, decompose_report, is_normal,
                              m_norm, operator_of, q_limit, windowed_partition)


def cyclic(n):
    return group_as_hypergroup(catalog_group(f"Z{n}"))


def brute_limit(M, m, n=4000):
    """lim (P*)^n P^n by plain matrix powers."""
    Pn = np.linalg.matrix_power(M, n)
    adj = (Pn.T * m[None, :]) / m[:, None]
    return adj @ Pn


def test_operator_matrix_on_group_is_translation():
    Z4 = cyclic(4)
    P = operator_of(Measure.point(Z4, 1))
    # (P f)(x) = f(x + 1)
    assert P.matrix[0, 1] == 1 and P.matrix[3, 0] == 1
    assert P.exact


def test_operator_rows_stochastic(catalog):
    rng = random.Random(1)
    for H in catalog.values():
        lam = random_measure(H, range(len(H)), rng)
        P = operator_of(lam)
        for row in P.matrix:
            assert sum(row) == 1


def test_adjoint_exact_and_float_agree(S3_conj):
    lam = Measure(S3_conj, {1: Fraction(1, 2), 2: Fraction(1, 2)})
    P = operator_of(lam)
    assert np.allclose(P.adjoint().astype(float), operator_of(lam.to_float()).adjoint())
    # self-adjoint because lam is symmetric
    assert (P.adjoint() == P.matrix).all()


def test_operator_requires_probability(Z3):
    half = Measure(Z3, {1: Fraction(1, 2)})
    with pytest.raises(ValueError):
        operator_of(half)
    assert operator_of(half, allow_subprobability=True).matrix[0, 1] == Fraction(1, 2)
    with pytest.raises(TypeError):
        operator_of(Measure.point(integers(), 0))


def test_q_limit_z6_lazy_walk():
    # circulant: eigenvalues (1 + w^k)/2 have modulus < 1 for k != 0
    Z6 = cyclic(6)
    lam = Measure(Z6, {0: Fraction(1, 2), 1: Fraction(1, 2)})
    lim = q_limit(operator_of(lam.to_float()))
    assert np.allclose(lim.Q, np.full((6, 6), 1 / 6), atol=1e-9)
    assert lim.min_decrease >= -1e-12


def test_q_limit_z4_walk_partition():
    Z4 = cyclic(4)
    lam = Measure(Z4, {1: Fraction(1, 2), 3: Fraction(1, 2)})
    res = decompose(lam)
    assert res.partition == [[0, 2], [1, 3]]
    assert res.dim_sigma_d == 2 and res.dim_e0 == 2 and res.kl_holds
    expected = np.array([[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1]]) / 2
    assert np.allclose(res.Q, expected, atol=1e-9)


@pytest.mark.parametrize("name", ["conj(S3)", "S4//S3", "D4//<s>", "S4//<(12)>"])
def test_q_limit_matches_brute_force(catalog, name):
    H = catalog[name]
    rng = random.Random(len(H))
    lam = random_measure(H, range(len(H)), rng, exact=False)
    P = operator_of(lam)
    lim = q_limit(P)
    ref = brute_limit(P.matrix, H.float_haar)
    assert np.allclose(lim.Q, ref, atol=1e-8)


def test_q_limit_two_point():
    # point mass on the 3-cycle class
    H = conjugacy_hypergroup(catalog_group("S3"))
    lam = Measure.point(H, 2)
    res = decompose(lam)
    assert res.kl_holds and res.residual < 1e-8


def test_monotonicity_error_raised():
    Z3 = cyclic(3)
    P = operator_of(Measure.point(Z3, 1, exact=False))
    bad = type(P)(P.matrix * 1.01, P.host, P.measure)
    with pytest.raises(MonotonicityError):
        q_limit(bad)


def test_nonconverged_budget():
    Z6 = cyclic(6)
    lam = Measure(Z6, {0: 0.5, 1: 0.5}, exact=False)
    with pytest.raises(NonConverged) as err:
        q_limit(operator_of(lam), n_max=3)
    assert err.value.iterations == 3


def test_decompose_identity_everything_deterministic(S3_conj):
    res = decompose(Measure.point(S3_conj, 0))
    assert res.dim_sigma_d == 3 and res.dim_e0 == 0
    assert res.partition == [[0], [1], [2]]


def test_e0_functions_decay(catalog):
    rng = np.random.default_rng(0)
    H = catalog["D4//<s>"]
    lam = random_measure(H, range(len(H)), random.Random(4), exact=False)
    res = decompose(lam)
    P = operator_of(lam).matrix
    for _ in range(3):
        f = res.e0_basis @ rng.standard_normal(res.dim_e0)
        g = f.copy()
        for _ in range(400):
            g = P @ g
        assert m_norm(g[:, None], H) < 1e-6 * max(1.0, m_norm(f[:, None], H))


def test_decompose_report_fields(Z3):
    lam = Measure(Z3, {0: Fraction(1, 2), 1: Fraction(1, 2)})
    rep = decompose_report(lam)
    assert rep["kl_holds"] and rep["criteria_agree"]
    assert rep["dim_sigma_d"] == 1 and rep["dim_e0"] == 2
    assert rep["q_minus_p_rho"] < 1e-8
    assert rep["measure_verdict"].startswith("Converged")


def test_is_normal_cross_check(catalog):
    rng = random.Random(9)
    G = group_as_hypergroup(catalog_group("S3"))
    found = {True: 0, False: 0}
    for _ in range(30):
        lam = random_measure(G, range(6), rng, support=2)
        found[is_normal(operator_of(lam))] += 1
    assert found[True] and found[False]
    for name in ("Z6", "conj(S3)", "conj(S4)", "S4//S3"):
        H = catalog[name]
        lam = random_measure(H, range(len(H)), rng)
        assert is_normal(operator_of(lam))


def test_bilateral_shift_z_cross_z2():
    Z2 = cyclic(2)
    H = z_cross_f(Z2)
    lam = Measure(H, {(1, 0): Fraction(1, 2), (1, 1): Fraction(1, 2)})
    assert bilateral_shift_check(H, lam)
    rho = Measure(H, {(0, 0): Fraction(1, 2), (0, 1): Fraction(1, 2)})
    part = windowed_partition(H, rho, [(n, i) for n in range(-3, 4) for i in range(2)])
    assert part == [[(n, 0), (n, 1)] for n in range(-3, 4)]


def test_bilateral_shift_detects_wrong_measure():
    Z2 = cyclic(2)
    H = z_cross_f(Z2)
    with pytest.raises(PreconditionError):
        bilateral_shift_check(H, Measure(H, {(0, 1): Fraction(1)}))
    with pytest.raises(PreconditionError):
        bilateral_shift_check(integers(), Measure.point(integers(), 1))
    # support in fibre 2: x^m F is fibre 2m and the identity still holds
    assert bilateral_shift_check(H, Measure(H, {(2, 0): Fraction(1)}), range(-3, 4), range(1, 4))


def test_product_host_partition():
    Z2 = cyclic(2)
    P = direct_product(Z2, conjugacy_hypergroup(catalog_group("S3")))
    # lam on {1} x conj(S3): walk flips the Z2 coordinate and mixes the classes
    lam = Measure(P, {3: Fraction(1, 3), 4: Fraction(1, 3), 5: Fraction(1, 3)})
    res = decompose(lam)
    assert res.partition == [[0, 1, 2], [3, 4, 5]]
