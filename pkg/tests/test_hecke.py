"""Square-index Hecke action, eigenvalues, lift relation, growth reports."""

import math
from fractions import Fraction

import numpy as np
import pytest

from hiwlab import hecke as hk
from hiwlab import qseries as qs


@pytest.fixture(scope="module")
def eta8(eta8_cubed_1e6):
    return eta8_cubed_1e6


def chi_sq_for(form):
    return lambda p: 0 if form.level % p == 0 else 1


def test_apply_tp2_worked_example(eta8):
    g = hk.apply_tp2(eta8, 3)
    assert g.coeffs[1] == -4   # c(9) + (-1/3) c(1) = -3 - 1
    assert g.coeffs[9] == 12   # c(81) + 0 + 3 c(1) = 9 + 3


def test_apply_tp2_zero_series():
    z = qs.QSeries([0] * 200, 3, 4)
    g = hk.apply_tp2(z, 3)
    assert all(c == 0 for c in g.coeffs)


def test_apply_tp2_linearity(eta8, theta_delta_small):
    f = theta_delta_small
    g = qs.QSeries([c * 3 - 7 * d for c, d in zip(f.coeffs, f.coeffs[::-1])],
                   25, 4, truncation=f.truncation)
    a, b = 2, -5
    combo = qs.QSeries([a * c1 + b * c2 for c1, c2 in zip(f.coeffs, g.coeffs)], 25, 4)
    lhs = hk.apply_tp2(combo, 3)
    t_f = hk.apply_tp2(f, 3)
    t_g = hk.apply_tp2(g, 3)
    assert lhs.coeffs == [a * c1 + b * c2 for c1, c2 in zip(t_f.coeffs, t_g.coeffs)]


def test_tp2_commutativity(eta8):
    p, q = 3, 5
    ab = hk.apply_tp2(hk.apply_tp2(eta8, p), q)
    ba = hk.apply_tp2(hk.apply_tp2(eta8, q), p)
    n = min(ab.truncation, ba.truncation)
    assert ab.coeffs[: n + 1] == ba.coeffs[: n + 1]


def test_apply_tp2_level_prime_rejected(eta8):
    with pytest.raises(hk.UnsupportedPrimeError):
        hk.apply_tp2(eta8, 2)


def test_extract_eigenvalue(eta8):
    r3 = hk.extract_eigenvalue(eta8, 3)
    assert r3.lam == -4 and r3.is_eigen and r3.residual == 0.0
    r5 = hk.extract_eigenvalue(eta8, 5)
    assert r5.lam == 6 and r5.is_eigen
    scaled = eta8.scale(5)
    assert hk.extract_eigenvalue(qs.QSeries(scaled.coeffs[:4000], 3, 64), 3).lam == -4


def test_theta_delta_not_eigen(theta_delta_small):
    r = hk.extract_eigenvalue(theta_delta_small, 3)
    assert not r.is_eigen
    assert r.residual > 0


def test_shimura_lambda_recurrence():
    lambdas = {2: 0, 3: -4, 5: 6, 7: -8}
    sh = hk.shimura_lambda_n(lambdas, 10, 1, chi_sq=lambda p: 0 if p == 2 else 1)
    assert sh.lambda_n[1] == 1
    assert sh.lambda_n[6] == sh.lambda_n[2] * sh.lambda_n[3]
    assert sh.lambda_n[9] == Fraction(-4) ** 2 - 3  # lam(3)^2 - chi^2(3) 3^(2l-1)
    with pytest.raises(ValueError):
        hk.shimura_lambda_n({2: 0}, 10, 1)


def test_lambda_recurrence_matches_direct_action(eta8):
    # lambda(9) from the recurrence agrees with the ratio of T_9-iterated action
    lam3 = hk.extract_eigenvalue(eta8, 3).lam
    lam5 = hk.extract_eigenvalue(eta8, 5).lam
    lam7 = hk.extract_eigenvalue(eta8, 7).lam
    sh = hk.shimura_lambda_n({2: 0, 3: lam3, 5: lam5, 7: lam7}, 9, 1,
                             chi_sq=chi_sq_for(eta8))
    assert sh.lambda_n[9] == lam3 * lam3 - 3


def test_shimura_relation_exact(eta8):
    lambdas = {p: hk.extract_eigenvalue(eta8, p).lam for p in (3, 5, 7, 11, 13)}
    # the level prime: the U-action annihilates the series, so 0 is its
    # square-index eigenvalue
    killed = hk.u_action(eta8, 4)
    assert all(c == 0 for c in killed.coeffs)
    lambdas[2] = 0
    res = hk.shimura_relation_check(eta8, lambdas, 1, 15, chi_sq=chi_sq_for(eta8))
    assert res == 0


def test_shimura_relation_example_values(eta8):
    # a(9) 3^(1/2) = -3 against a(1)(lambda(3) - (-1/3) lambda(1)) = -4 + 1... = -3
    lam3 = hk.extract_eigenvalue(eta8, 3).lam
    assert eta8.coeffs[9] == 1 * (lam3 - (-1) * 1)
    lam5 = hk.extract_eigenvalue(eta8, 5).lam
    assert eta8.coeffs[25] == 1 * (lam5 - (+1) * 1)  # (-1/5) = +1


def test_shimura_relation_requires_squarefree(eta8):
    with pytest.raises(ValueError):
        hk.shimura_relation_check(eta8, {2: 0, 3: -4}, 4, 3)


def test_deligne_ratio_report(eta8):
    rep = hk.deligne_ratio_report(eta8, None, 1, 15)
    assert rep["flag"] is None
    # |a(n^2)|/|a(1)| = sqrt(n) for odd n: the fit sees exponent ~ 1/2
    assert abs(rep["exponent"] - 0.5) < 0.05
    # a(t) = 0 flag
    zero = qs.QSeries([0] * 300, 3, 64)
    assert hk.deligne_ratio_report(zero, None, 2, 5)["flag"] == "a(t)=0"
    # synthetic: square indices beyond the first vanish -> -inf sentinel
    only_t = qs.QSeries([0, 1] + [0] * 300, 3, 64)
    assert hk.deligne_ratio_report(only_t, None, 1, 10)["exponent"] == float("-inf")


def test_fourth_moment_exponents(eta8, theta_delta_1e6):
    slope = hk.fourth_moment_exponent(eta8, [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6])
    assert abs(slope - 1.5) <= 0.05
    # closed-form oracle: sum of (2k+1)^2 up to sqrt(x)
    o = []
    for x in (10 ** 3, 10 ** 6):
        ks = np.arange(0, (math.isqrt(x) - 1) // 2 + 1)
        o.append(math.log(float(np.sum((2 * ks + 1.0) ** 2))))
    oracle_slope = (o[1] - o[0]) / (math.log(10 ** 6) - math.log(10 ** 3))
    assert abs(oracle_slope - 1.5) < 0.05
    td = hk.fourth_moment_exponent(theta_delta_1e6, [10 ** 4, 10 ** 5, 10 ** 6])
    assert td <= 1.35


def test_fourth_moment_constant_sequence(window):
    trunc = 10 ** 4
    f = qs.QSeries([0] + [1] * trunc, 3, 4)
    f._float_coeffs = np.ones(trunc + 1)
    f._float_coeffs[0] = 0.0
    slope = hk.fourth_moment_exponent(f, [10 ** 2, 10 ** 3, 10 ** 4])
    assert abs(slope - 1.0) < 1e-3


def test_coeff_bound_report(eta8, theta_delta_1e5):
    table = hk.coeff_bound_report(eta8, [10 ** 2, 10 ** 4, 10 ** 6])
    vals = [v for _, v in table]
    assert vals == sorted(vals)
    assert all(abs(v - 1.0) < 1e-12 for v in vals)  # only n = 1 qualifies
    ttable = hk.coeff_bound_report(theta_delta_1e5, [10 ** 3, 10 ** 4, 10 ** 5])
    tvals = [v for _, v in ttable]
    assert tvals == sorted(tvals)
    assert all(math.isfinite(v) for v in tvals)


def test_squarefree_kernel_and_kronecker():
    assert hk.squarefree_kernel(1) == (1, 1)
    assert hk.squarefree_kernel(12) == (3, 2)
    assert hk.squarefree_kernel(360) == (10, 6)
    assert hk.kronecker(-4, 3) == -1
    assert hk.kronecker(-4, 5) == 1
    assert hk.kronecker(8, 3) == hk.kronecker(8 % 3, 3)
    assert hk.extended_symbol(-9, 3) == 0
    assert hk.extended_symbol(-1, 2) == 0
    assert hk.extended_symbol(-1, 5) == 1
    assert hk.extended_symbol(-1, 7) == -1
    assert hk.extended_symbol(0, 1) == 1
