import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperkl.constructors import (catalog_group, conjugacy_hypergroup, double_coset_hypergroup,
                                  group_as_hypergroup, integers, subgroup_generated)
from hyperkl.measure import (HostMismatch, Measure, alternating_limit, alternating_sequence,
                             convolve, involute, is_idempotent, l1_distance, limit_detect,
                             random_measure, trajectory)

import oracles


def z_walk(exact=True):
    Z = integers()
    h = Fraction(1, 2) if exact else 0.5
    return Measure(Z, {-1: h, 1: h}, exact=exact)


def test_measure_rejects_bad_weights(Z3):
    with pytest.raises(ValueError):
        Measure(Z3, {0: Fraction(-1, 2)})
    with pytest.raises(ValueError):
        Measure(Z3, {0: Fraction(3, 4), 1: Fraction(1, 2)})
    assert Measure(Z3, {0: Fraction(0), 1: Fraction(1)}).support() == [1]


def test_measure_immutable(Z3):
    mu = Measure.point(Z3, 1)
    with pytest.raises(AttributeError):
        mu.atoms = {}


def test_host_mismatch(Z3, S3_conj):
    with pytest.raises(HostMismatch):
        convolve(Measure.point(Z3, 0), Measure.point(S3_conj, 0))


def test_mixed_modes_rejected(Z3):
    with pytest.raises(TypeError):
        convolve(Measure.point(Z3, 0), Measure.point(Z3, 0, exact=False))


def test_dirac_identity(S3_conj):
    mu = Measure(S3_conj, {1: Fraction(1, 3), 2: Fraction(2, 3)})
    e = Measure.point(S3_conj, 0)
    assert convolve(e, mu) == mu and convolve(mu, e) == mu


def test_conjugacy_convolution_matches_group_algebra(S3, S3_conj):
    classes = oracles.conjugacy_classes(S3.table)
    rng = random.Random(0)
    for _ in range(20):
        mu = random_measure(S3_conj, range(3), rng)
        nu = random_measure(S3_conj, range(3), rng)
        # lift class measures to class-invariant group measures
        lift = lambda m: {g: w / len(classes[c]) for c, w in m.atoms.items()  # noqa: E731
                          for g in classes[c]}
        expected = oracles.pushforward(oracles.group_convolve(S3.table, lift(mu), lift(nu)),
                                       classes)
        assert convolve(mu, nu).atoms == expected


def test_float_fast_path_agrees_with_exact(catalog):
    rng = random.Random(5)
    for H in catalog.values():
        mu = random_measure(H, range(len(H)), rng)
        nu = random_measure(H, range(len(H)), rng)
        ex = convolve(mu, nu)
        fl = convolve(mu.to_float(), nu.to_float())
        assert np.allclose(ex.to_float().vector(), fl.vector(), atol=1e-14)


def test_involute_is_involutive(catalog):
    rng = random.Random(2)
    for H in catalog.values():
        mu = random_measure(H, range(len(H)), rng)
        assert involute(involute(mu)) == mu


def test_l1_distance():
    lam = z_walk()
    assert l1_distance(lam, Measure.point(integers(), 0)) == 2
    assert l1_distance(lam, lam) == 0


def test_is_idempotent_examples(S3):
    G = group_as_hypergroup(S3)
    H = [0, 1]
    assert is_idempotent(Measure.uniform(G, H))
    assert is_idempotent(Measure.point(G, 0))
    non_sub = next(g for g in range(1, 6) if S3.table[g][g] != 0)  # a 3-cycle
    assert not is_idempotent(Measure.uniform(G, [0, non_sub]))
    assert is_idempotent(Measure(G, {}))
    with pytest.raises(ValueError):
        is_idempotent(Measure(G, {0: Fraction(1, 2)}))


def test_is_idempotent_haar_of_subhypergroup():
    S4 = catalog_group("S4")
    K, _ = double_coset_hypergroup(S4, subgroup_generated(S4, [1, 2]))
    # normalised Haar of the whole finite hypergroup is idempotent
    m = K.haar
    tot = sum(m)
    assert is_idempotent(Measure(K, {i: w / tot for i, w in enumerate(m)}))


def test_alternating_sequence_z_walk_matches_binomial():
    seq = alternating_sequence(z_walk(), 8)
    for n, entry in enumerate(seq, 1):
        assert entry.atoms == oracles.binomial_walk(2 * n)
        assert entry[0] == oracles.central_binomial(n)


def test_alternating_sequence_requires_probability(Z3):
    with pytest.raises(ValueError):
        alternating_sequence(Measure(Z3, {0: Fraction(1, 2)}), 3)


def test_support_cap_truncates():
    seq = alternating_sequence(z_walk(), 50, support_cap=20)
    assert seq.truncated and len(seq) < 50
    assert max(len(e) for e in seq) <= 20


def test_limit_detect_converges_on_group(Z3):
    lam = Measure(Z3, {0: Fraction(1, 2), 1: Fraction(1, 2)}).to_float()
    verdict, n = alternating_limit(lam, tol=1e-10)
    assert verdict.converged
    assert np.allclose(verdict.limit.vector(), [1 / 3] * 3, atol=1e-9)
    assert is_idempotent(verdict.limit, tol=1e-8)


def test_limit_detect_exact_stationary(Z3):
    lam = Measure.point(Z3, 1)
    seq = alternating_sequence(lam, 4)
    v = limit_detect(seq)
    assert v.converged and v.at == 2 and v.limit == Measure.point(Z3, 0)
    assert str(v) == "Converged at n=2"


def test_limit_detect_undecided_on_short_or_finite(Z3):
    lam = Measure(Z3, {0: Fraction(1, 2), 1: Fraction(1, 2)})
    seq = alternating_sequence(lam, 3)
    assert limit_detect(seq[:1]).kind == "undecided"
    assert limit_detect(seq, window=2).kind == "undecided"
    with pytest.raises(ValueError):
        limit_detect([])


def test_z_walk_escapes():
    verdict, n = alternating_limit(z_walk(exact=False), n_max=40)
    assert n == 40 and str(verdict) == "EscapesToZero"


def test_trajectory_rows():
    rep = trajectory(z_walk(), 6)
    assert [r["n"] for r in rep["rows"]] == list(range(1, 7))
    assert rep["rows"][0]["l1_gap"] is None
    assert rep["rows"][2]["max_atom"] == pytest.approx(float(oracles.central_binomial(3)))
    assert rep["rows"][3]["support_size"] == 9
    assert rep["verdict_kind"] == "escapes"


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_convolution_associative_and_mass(seed):
    H = conjugacy_hypergroup(catalog_group("D4"))
    rng = random.Random(seed)
    a, b, c = (random_measure(H, range(len(H)), rng) for _ in range(3))
    assert convolve(convolve(a, b), c) == convolve(a, convolve(b, c))
    assert convolve(a, b).mass() == 1
    # involution reverses products
    assert involute(convolve(a, b)) == convolve(involute(b), involute(a))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_alternating_entries_symmetric(seed):
    H = group_as_hypergroup(catalog_group("S3"))
    rng = random.Random(seed)
    lam = random_measure(H, range(6), rng)
    for entry in alternating_sequence(lam, 3):
        assert involute(entry) == entry and entry.mass() == 1
