"""Exact series construction, arithmetic, and file format."""

import math

import numpy as np
import pytest

from hiwlab import qseries as qs


def naive_multiply(a, b, trunc):
    """O(X^2) reference convolution, independent of the engine."""
    out = [0] * (trunc + 1)
    for i, ai in enumerate(a):
        if ai == 0 or i > trunc:
            continue
        for j, bj in enumerate(b):
            if i + j > trunc:
                break
            if bj:
                out[i + j] += ai * bj
    return out


def naive_euler_product(trunc):
    """prod (1 - q^n) multiplied out factor by factor."""
    cur = [1] + [0] * trunc
    for n in range(1, trunc + 1):
        nxt = cur[:]
        for i in range(trunc + 1 - n):
            if cur[i]:
                nxt[i + n] -= cur[i]
        cur = nxt
    return cur


def test_eta_expansion_matches_euler_product():
    e = qs.eta_expansion(300)
    assert e.coeffs == naive_euler_product(300)


def test_eta_expansion_examples():
    e = qs.eta_expansion(10)
    assert {n: c for n, c in enumerate(e.coeffs) if c} == {0: 1, 1: -1, 2: -1, 5: 1, 7: 1}
    e1 = qs.eta_expansion(1)
    assert e1.coeffs == [1, -1]
    with pytest.raises(ValueError):
        qs.eta_expansion(0)


def test_eta_cubed_closed_form():
    e = qs.eta_expansion(30)
    cubed = qs.multiply(qs.multiply(e, e), e)
    expected = {0: 1, 1: -3, 3: 5, 6: -7, 10: 9, 15: -11, 21: 13, 28: -15}
    assert {n: c for n, c in enumerate(cubed.coeffs) if c} == expected


def test_eta_cubed_cross_check_large():
    # triple-product support pattern at a four-digit truncation, exactly
    x = 10 ** 4
    e = qs.eta_expansion(x)
    cubed = qs.multiply(qs.multiply(e, e), e)
    expected = [0] * (x + 1)
    for g, c in qs.eta_cubed_support(x):
        expected[g] = c
    assert cubed.coeffs == expected


def test_theta_expansion():
    t = qs.theta_expansion(5)
    assert t.coeffs == [1, 2, 0, 0, 2, 0]
    t9 = qs.theta_expansion(9)
    assert t9.coeffs[9] == 2
    with pytest.raises(ValueError):
        qs.theta_expansion(0)


def test_dilate():
    e = qs.eta_expansion(100)
    d = qs.dilate(e, 8)
    assert d.truncation == 100
    for n, c in enumerate(e.coeffs):
        if 8 * n <= 100:
            assert d.coeffs[8 * n] == c
    assert qs.dilate(e, 1) is e
    t = qs.theta_expansion(20)
    assert qs.dilate(t, 4).coeffs[4] == 2


def test_multiply_against_naive_reference():
    rng = np.random.RandomState(11)
    for trunc in (50, 400, 2000):
        a = [0] * (trunc + 1)
        b = [0] * (trunc + 1)
        for _ in range(trunc // 4):
            a[rng.randint(0, trunc + 1)] = int(rng.randint(-10 ** 6, 10 ** 6))
            b[rng.randint(0, trunc + 1)] = int(rng.randint(-10 ** 6, 10 ** 6))
        sa = qs.QSeries(a, 1, 1)
        sb = qs.QSeries(b, 1, 1)
        prod = qs.multiply(sa, sb, trunc)
        assert prod.coeffs == naive_multiply(a, b, trunc)


def test_multiply_commutes_and_identity():
    rng = np.random.RandomState(3)
    a = [int(rng.randint(-50, 50)) for _ in range(200)]
    b = [int(rng.randint(-50, 50)) for _ in range(200)]
    sa, sb = qs.QSeries(a, 1, 1), qs.QSeries(b, 1, 1)
    assert qs.multiply(sa, sb).coeffs == qs.multiply(sb, sa).coeffs
    one = qs.QSeries([1] + [0] * 199, 0, 1)
    assert qs.multiply(sa, one).coeffs == sa.coeffs


def test_dilate_multiply_interplay():
    rng = np.random.RandomState(5)
    a = [int(rng.randint(-9, 9)) for _ in range(60)]
    b = [int(rng.randint(-9, 9)) for _ in range(60)]
    sa, sb = qs.QSeries(a, 1, 1), qs.QSeries(b, 1, 1)
    d = 3
    lhs = qs.dilate(qs.multiply(sa, sb), d)
    rhs = qs.multiply(qs.dilate(sa, d), qs.dilate(sb, d))
    assert lhs.coeffs == rhs.coeffs


def test_tau_values():
    d = qs.delta_expansion(12)
    assert d.coeffs[1:8] == [1, -24, 252, -1472, 4830, -6048, -16744]


def test_theta_delta_coefficients():
    f = qs.builtin_form("theta_delta", 50)
    assert f.coeffs[1:5] == [1, -22, 204, -968]
    assert f.weight_two == 25 and f.level == 4 and f.ell == 12
    # independent convolution oracle
    theta = qs.theta_expansion(50)
    delta = qs.delta_expansion(50)
    assert f.coeffs == naive_multiply(theta.coeffs, delta.coeffs, 50)


def test_eta8_cubed_support():
    f = qs.builtin_form("eta8_cubed", 2000)
    assert f.weight_two == 3 and f.level == 64
    expected = {}
    k = 0
    while (2 * k + 1) ** 2 <= 2000:
        expected[(2 * k + 1) ** 2] = (-1) ** k * (2 * k + 1)
        k += 1
    assert {n: c for n, c in enumerate(f.coeffs) if c} == expected


def test_builtin_unknown_name():
    with pytest.raises(ValueError):
        qs.builtin_form("nope", 10)


def test_normalized_coeff():
    f = qs.builtin_form("theta_delta", 50)
    assert qs.normalized_coeff(f, 1) == 1.0
    assert math.isclose(qs.normalized_coeff(f, 2), -22 / 2 ** 5.75, rel_tol=1e-14)
    g = qs.builtin_form("eta8_cubed", 100)
    assert math.isclose(qs.normalized_coeff(g, 9), -math.sqrt(3), rel_tol=1e-14)
    with pytest.raises(IndexError):
        qs.normalized_coeff(f, 51)


def test_float_coeffs_recover_integers(theta_delta_small):
    f = theta_delta_small
    ns = np.arange(1, f.truncation + 1, dtype=np.float64)
    recovered = f.float_coeffs[1:] * ns ** f.norm_exponent
    raw = np.array([float(c) for c in f.coeffs[1:]])
    scale = np.maximum(np.abs(raw), 1.0)
    assert np.max(np.abs(recovered - raw) / scale) < 1e-12


def test_eta_quotient_validation():
    with pytest.raises(ValueError):
        qs.EtaQuotientSpec(((1, 1),))  # sum d*r = 1, not divisible by 24
    spec = qs.EtaQuotientSpec(((8, 3),))
    assert spec.prefactor == 1


def test_eta_quotient_negative_exponent():
    # eta(z)^24 / eta(z)^24 = q^0 ... combined spec with opposite exponents
    quot = qs.eta_quotient([(1, 24), (1, -24)], 50, weight_two=0, level=1)
    assert quot.coeffs == [1] + [0] * 50


def test_qexp_roundtrip(tmp_path, theta_delta_small):
    f = qs.builtin_form("theta_delta", 1000)
    path = tmp_path / "f.qexp"
    qs.write_qexp(f, path)
    back = qs.read_qexp(path)
    assert back == f
    # byte stability of the canonical form
    path2 = tmp_path / "g.qexp"
    qs.write_qexp(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_qexp_errors(tmp_path):
    bad = tmp_path / "bad.qexp"
    bad.write_text("QEXP v1\nweight 24/2 level 4 char trivial trunc 10\n1 5\n")
    with pytest.raises(qs.QExpFormatError):
        qs.read_qexp(bad)
    bad.write_text("QEXP v1\nweight 25/2 level 4 char trivial trunc 10\n1 5\n1 6\n")
    with pytest.raises(qs.QExpFormatError):
        qs.read_qexp(bad)
    bad.write_text("QEXP v1\nweight 25/2 level 4 char trivial trunc 10\n2 x\n")
    with pytest.raises(qs.QExpFormatError):
        qs.read_qexp(bad)
    bad.write_text("nonsense\n")
    with pytest.raises(qs.QExpFormatError):
        qs.read_qexp(bad)


def test_qexp_gap_warning(tmp_path):
    p = tmp_path / "gap.qexp"
    p.write_text("QEXP v1\nweight 25/2 level 4 char trivial trunc 6\n1 1\n5 -3\n")
    s = qs.read_qexp(p)
    assert s.coeffs == [0, 1, 0, 0, 0, -3, 0]
    assert s.read_warnings == 5  # implicit zeros flagged
