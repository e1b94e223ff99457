import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hopfprice import pricing
from hopfprice.dirac import RepState, option_bound, su2_fundamental, su2_identity, su2_rotation
from hopfprice.errors import (
    DimTooLarge,
    DomainViolation,
    IndexOrder,
    InvalidCorrelation,
    MomentInconsistency,
    NoRoot,
    OutOfRange,
)
from hopfprice.gauss import GaussState, QuadObservable, qg_pair
from hopfprice.pricing import (
    DiracEconomy,
    GaussEconomy,
    Timeline,
    build_gauss_increments,
    classical_binomial_max,
    dirac_discount_factor,
    dirac_fx_option_price,
    dirac_ir_option_price,
    dirac_price_evolve,
    implied_vol,
    qg_caplet_price,
    qg_discount_factor,
    qg_fx_option_price,
    qg_fx_rate,
    qg_price_evolve,
    qg_spread_option_price,
    three_moment_sigma,
)
from hopfprice.quadrature import McConfig, mc_integrate
from oracles import bachelier, black, normal_expectation_1d, two_point_moments


def coef_dev(a, b):
    return max(abs(a.alpha / b.alpha - 1), np.max(np.abs(a.phi - b.phi)), np.max(np.abs(a.zeta - b.zeta)))


def random_economy(rng, n=5, d=2, ccys=("usd", "eur"), quadratic=True):
    times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.25, 1.0, n - 1))])
    tl = Timeline(times)
    A = rng.standard_normal((d, d))
    corr = A @ A.T + d * np.eye(d)
    dd = np.sqrt(np.diag(corr))
    corr = corr / np.outer(dd, dd)
    inc = build_gauss_increments(rng.uniform(0.05, 0.2, d), rng.uniform(0.0, 0.5, d), corr, tl)
    phi, zeta, p, s = {}, {}, {}, {}
    for k, c in enumerate(ccys):
        phi[c] = rng.uniform(-1, 1, (n, d)) * times[:, None]
        z = rng.standard_normal((n, d, d))
        zeta[c] = 0.3 * (z + z.transpose(0, 2, 1)) if quadratic else np.zeros((n, d, d))
        p[c] = np.exp(-rng.uniform(0.01, 0.05) * times)
        s[c] = 1.0 + 0.2 * k
    return GaussEconomy(tl, inc.mu, inc.nu, phi, zeta, p, s)


def linear_fx_economy(total_vol=0.2, p_dom=1.0, p_for=1.0, s_for=1.0):
    tl = Timeline([0.0, 1.0])
    return GaussEconomy(
        tl, ([0.0],), ([[1.0]],),
        {"a": [[0.0], [total_vol]], "b": [[0.0], [0.0]]}, {},
        {"a": [1.0, p_for], "b": [1.0, p_dom]}, {"a": s_for, "b": 1.0},
    )


# ---------------------------------------------------------------- timeline and increments

@pytest.mark.parametrize("times", [[0.5, 1.0], [0.0, 1.0, 1.0], [0.0, 2.0, 1.0], []])
def test_timeline_rejects(times):
    with pytest.raises(OutOfRange):
        Timeline(times)


def test_timeline_index_checks():
    tl = Timeline([0.0, 0.5, 1.0])
    assert tl.accrual(0, 2) == 1.0
    with pytest.raises(IndexOrder):
        tl.check(2, 1)
    with pytest.raises(OutOfRange):
        tl.check(0, 3)


def test_zero_vol_increments():
    tl = Timeline([0.0, 1.0, 2.0])
    inc = build_gauss_increments([0.0], [0.3], [[1.0]], tl)
    assert all(not v.any() for v in inc.nu)


def test_flat_vol_increments():
    tl = Timeline([0.0, 0.25, 1.0, 3.0])
    inc = build_gauss_increments([0.2], [0.0], [[1.0]], tl)
    for m, v in enumerate(inc.nu):
        assert v[0, 0] == pytest.approx(0.04 * (tl.times[m + 1] - tl.times[m]), rel=1e-14)


def test_mean_reverting_increment_integral():
    T = 2.0
    tl = Timeline([0.0, T])
    inc = build_gauss_increments([1.0], [1.0], [[1.0]], tl)
    ref, _ = integrate.quad(lambda u: math.exp(-2 * (T - u)), 0, T)
    assert abs(inc.nu[0][0, 0] - ref) < 1e-13
    assert abs(ref - (1 - math.exp(-2 * T)) / 2) < 1e-13


def test_increments_additive():
    fine = Timeline([0.0, 0.3, 0.9, 2.0])
    coarse = Timeline([0.0, 2.0])
    corr = [[1.0, 0.4], [0.4, 1.0]]
    a = build_gauss_increments([0.1, 0.2], [0.5, 0.1], corr, fine)
    b = build_gauss_increments([0.1, 0.2], [0.5, 0.1], corr, coarse)
    assert np.allclose(sum(a.nu), b.nu[0], rtol=1e-13, atol=0)


@pytest.mark.parametrize(
    "corr",
    [[[1.0, 0.5], [0.4, 1.0]], [[1.0, 0.5], [0.5, 0.9]], [[1.0, 2.0], [2.0, 1.0]]],
)
def test_invalid_correlation(corr):
    with pytest.raises(InvalidCorrelation):
        build_gauss_increments([0.1, 0.1], [0.0, 0.0], corr, Timeline([0.0, 1.0]))


# ---------------------------------------------------------------- Gauss economy

def test_initial_discount_factors_reproduced():
    econ = random_economy(np.random.default_rng(0))
    for c in econ.currencies:
        for i in range(5):
            assert abs(qg_pair(econ.state(i), econ.deflator_square(c, i)) / (econ.s[c] * econ.p[c][i]) - 1) < 1e-13
            for j in range(i, 5):
                pij = qg_discount_factor(econ, c, i, j)
                # <N_0i | q_i* q_i p_ij> = s p_j
                val = qg_pair(econ.state(i), pricing.qg_multiply(econ.deflator_square(c, i), pij))
                assert abs(val / (econ.s[c] * econ.p[c][j]) - 1) < 1e-12
        df = qg_discount_factor(econ, c, 0, 4)
        assert abs(df(np.zeros(2)) - econ.p[c][4] / econ.p[c][0]) < 1e-12


def test_discount_factor_i_equals_j_is_unit():
    econ = random_economy(np.random.default_rng(1))
    u = qg_discount_factor(econ, "usd", 2, 2)
    assert u.alpha == 1.0 and not u.phi.any() and not u.zeta.any()
    with pytest.raises(IndexOrder):
        qg_discount_factor(econ, "usd", 3, 2)


@pytest.mark.parametrize("seed", range(5))
def test_tower_law(seed):
    econ = random_economy(np.random.default_rng(seed))
    rng = np.random.default_rng(100 + seed)
    for c in econ.currencies:
        terminal = QuadObservable(1.0, 0.2 * rng.standard_normal(2), np.zeros((2, 2)))
        for i in range(5):
            for j in range(i, 5):
                for k in range(j, 5):
                    two = qg_price_evolve(econ, c, qg_price_evolve(econ, c, terminal, k, j), j, i)
                    one = qg_price_evolve(econ, c, terminal, k, i)
                    assert coef_dev(two, one) <= 1e-10


def test_linear_gauss_discount_factor_formula():
    econ = random_economy(np.random.default_rng(7), quadratic=False)
    for c in econ.currencies:
        for i in range(5):
            mu_i, nu_i = econ.state(i).mu, econ.state(i).nu
            for j in range(i, 5):
                df = qg_discount_factor(econ, c, i, j)
                pi, pj = econ.phi[c][i], econ.phi[c][j]
                # (p_j/p_i) exp((phi_j - phi_i)(x - mu_0i) - phi_j nu_0i phi_j / 2 + phi_i nu_0i phi_i / 2)
                assert np.allclose(df.phi, pj - pi, atol=1e-15)
                assert not df.zeta.any()
                alpha = econ.p[c][j] / econ.p[c][i] * math.exp(
                    -(pj - pi) @ mu_i - 0.5 * pj @ nu_i @ pj + 0.5 * pi @ nu_i @ pi
                )
                assert abs(df.alpha / alpha - 1) < 1e-12


def test_fx_rate_parity():
    econ = random_economy(np.random.default_rng(2), ccys=("a", "b", "c"))
    for i in range(5):
        ab, bc, ac = qg_fx_rate(econ, "a", "b", i), qg_fx_rate(econ, "b", "c", i), qg_fx_rate(econ, "a", "c", i)
        prod = pricing.qg_multiply(ab, bc)
        assert coef_dev(prod, ac) < 1e-14


def test_economy_domain_violation_names_location():
    tl = Timeline([0.0, 1.0])
    with pytest.raises(DomainViolation, match=r"\(0, 1, usd\)"):
        GaussEconomy(tl, ([0.0],), ([[1.0]],), {"usd": [[0.0], [0.0]]}, {"usd": [[0.0], [2.0]]},
                     {"usd": [1.0, 0.9]})


def test_economy_json():
    obj = {
        "timeline": [0.0, 1.0, 2.0],
        "factors": {"vol": [0.1], "mean_reversion": [0.2]},
        "currencies": {"usd": {"phi": [[0.0], [0.5], [1.0]], "p": [1.0, 0.97, 0.94]}},
    }
    econ = GaussEconomy.from_json(obj)
    assert econ.dim == 1 and econ.currencies == ["usd"]
    assert econ.state(2).nu[0, 0] == pytest.approx(0.01 * (1 - math.exp(-0.8)) / 0.4, rel=1e-13)


# ---------------------------------------------------------------- spread option

def test_black_reduction():
    st_ = GaussState([0.0], [[1.0]])
    s = 0.2
    A = QuadObservable(math.exp(-0.5 * s * s), [s], [[0.0]])
    B = QuadObservable.unit(1)
    got = qg_spread_option_price(st_, 1.0, A, 1.0, B)
    assert abs(got - 0.0796557) < 5e-5
    assert abs(got - black(1.0, 1.0, 0.2)) < 1e-13


@pytest.mark.parametrize("K", [0.5, 0.9, 1.0, 1.3, 2.0])
def test_black_reduction_across_strikes(K):
    st_ = GaussState([0.0], [[1.0]])
    A = QuadObservable(math.exp(-0.5 * 0.09), [0.3], [[0.0]])
    got = qg_spread_option_price(st_, 1.1, A, K, QuadObservable.unit(1))
    assert abs(got - black(1.1, K, 0.3)) < 1e-12


def test_tensor_method_close_to_black():
    st_ = GaussState([0.0], [[1.0]])
    A = QuadObservable(math.exp(-0.02), [0.2], [[0.0]])
    got = qg_spread_option_price(st_, 1.0, A, 1.0, QuadObservable.unit(1), method="tensor")
    assert abs(got - black(1.0, 1.0, 0.2)) < 1e-4


def test_spread_zero_strike_and_huge_strike():
    rng = np.random.default_rng(3)
    st_ = GaussState([0.1, -0.2], [[0.3, 0.1], [0.1, 0.2]])
    A = QuadObservable(1.0, [0.2, 0.1], [[0.1, 0.0], [0.0, -0.1]])
    B = QuadObservable(1.0, [-0.1, 0.3], [[0.0, 0.05], [0.05, 0.1]])
    A = A.scaled(1 / qg_pair(st_, A))
    B = B.scaled(1 / qg_pair(st_, B))
    assert abs(qg_spread_option_price(st_, 1.3, A, 0.0, B) - 1.3) < 1e-12
    assert qg_spread_option_price(st_, 1.0, A, 1e6, B) < 1e-12
    del rng


def test_spread_matches_tensor_oracle_2d():
    st_ = GaussState([0.1, -0.2], [[0.3, 0.1], [0.1, 0.2]])
    A = QuadObservable(1.0, [0.2, 0.1], [[0.1, 0.0], [0.0, -0.1]])
    B = QuadObservable(1.0, [-0.1, 0.3], [[0.0, 0.05], [0.05, 0.1]])
    A = A.scaled(1 / qg_pair(st_, A))
    B = B.scaled(1 / qg_pair(st_, B))
    for K in (0.8, 1.0, 1.2):
        got = qg_spread_option_price(st_, 1.0, A, K, B)
        est, se = mc_integrate(st_, lambda X: np.maximum(A(X) - K * B(X), 0.0), McConfig(paths=2**20))
        assert abs(got - est) < 4 * se
        assert abs(got - qg_spread_option_price(st_, 1.0, A, K, B, nodes=300)) < 1e-10
        assert got >= max(1.0 - K, 0.0) - 1e-12


def test_spread_anisotropic_quadratic_converges():
    # nearly flat curvature in one whitened direction puts the vertex far outside the grid
    econ = random_economy(np.random.default_rng(5))
    prices = [qg_fx_option_price(econ, "eur", "usd", 3, 1.45, nodes=n).price for n in (96, 300)]
    assert abs(prices[0] - prices[1]) < 1e-10
    m = qg_fx_option_price(econ, "eur", "usd", 3, 1.45, mc=McConfig(paths=2**20)).price
    assert abs(prices[0] - m) < 2e-5


def test_spread_three_factor_converges():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((3, 3))
    st_ = GaussState(np.zeros(3), 0.1 * X @ X.T)
    Z = rng.standard_normal((3, 3))
    A = QuadObservable(1.0, [0.5, 0.2, -0.3], 0.5 * (Z + Z.T))
    Z = rng.standard_normal((3, 3))
    B = QuadObservable(1.0, [-0.2, 0.1, 0.3], 0.3 * (Z + Z.T))
    A, B = A.scaled(1 / qg_pair(st_, A)), B.scaled(1 / qg_pair(st_, B))
    got = qg_spread_option_price(st_, 1.0, A, 1.0, B)
    assert abs(got - qg_spread_option_price(st_, 1.0, A, 1.0, B, nodes=256)) < 1e-10
    est, se = mc_integrate(st_, lambda X: np.maximum(A(X) - B(X), 0.0), McConfig(paths=2**20))
    assert abs(got - est) < 4 * se


def test_spread_mc_agrees():
    st_ = GaussState([0.0, 0.0], [[0.04, 0.01], [0.01, 0.02]])
    A = QuadObservable(1.0, [1.0, 0.5], [[0.2, 0.0], [0.0, 0.1]])
    B = QuadObservable.unit(2)
    A = A.scaled(1 / qg_pair(st_, A))
    quad = qg_spread_option_price(st_, 1.0, A, 1.0, B)
    mc = qg_spread_option_price(st_, 1.0, A, 1.0, B, mc=McConfig(paths=2**18))
    assert abs(quad - mc) < 2e-3 * quad + 1e-4


def test_spread_dimension_cap():
    st_ = GaussState(np.zeros(4), np.eye(4))
    with pytest.raises(DimTooLarge):
        qg_spread_option_price(st_, 1.0, QuadObservable.unit(4), 1.0, QuadObservable.unit(4))


# ---------------------------------------------------------------- FX and caplets

def test_fx_option_black():
    econ = linear_fx_economy(0.2, p_dom=0.95, p_for=0.97, s_for=1.1)
    F = 1.1 * 0.97 / 0.95
    for kappa in (0.9, 1.0, 1.2):
        q = qg_fx_option_price(econ, "a", "b", 1, kappa)
        assert abs(q.price - 0.95 * black(F, kappa, 0.2)) < 1e-13
        assert abs(q.vol_lognormal - 0.2) < 1e-8
        assert q.forward == pytest.approx(F)


def test_fx_option_monotone_convex():
    econ = random_economy(np.random.default_rng(5))
    ks = np.linspace(0.6, 1.6, 21)
    prices = np.array([qg_fx_option_price(econ, "eur", "usd", 3, k).price for k in ks])
    assert np.all(np.diff(prices) <= 1e-12)
    assert np.all(np.diff(prices, 2) >= -1e-9)


def _linear_caplet_economy(vol=0.01, mr=0.1):
    times = np.array([0.0, 1.0, 1.5])
    tl = Timeline(times)
    inc = build_gauss_increments([vol], [mr], [[1.0]], tl)
    # short-rate style loading: exposure grows with time
    phi = {"usd": np.array([[0.0], [-1.0], [-1.5]])}
    p = {"usd": np.exp(-0.03 * times)}
    return GaussEconomy(tl, inc.mu, inc.nu, phi, {}, p, {"usd": 1.0})


def test_caplet_zero_vol_is_intrinsic():
    econ = _linear_caplet_economy(vol=0.0)
    fwd = (math.exp(0.015) - 1) / 0.5
    for kappa in (0.0, 0.01, fwd, 0.05):
        q = qg_caplet_price(econ, "usd", 0, 1, 2, kappa)
        assert abs(q.forward - fwd) < 1e-14
        expect = 0.5 * math.exp(-0.045) * max(fwd - kappa, 0.0)
        assert abs(q.price - expect) < 1e-14
    assert qg_caplet_price(econ, "usd", 0, 1, 2, 0.0).vol_normal == 0.0


def test_caplet_matches_direct_quadrature():
    econ = _linear_caplet_economy(vol=0.02)
    st1 = econ.state(1)
    qj = econ.deflator_square("usd", 1)
    pjk = qg_discount_factor(econ, "usd", 1, 2)
    q0 = econ.deflator_square("usd", 0)(np.zeros(1))
    for kappa in (0.02, 0.03, 0.045):
        Kr = 1 + 0.5 * kappa
        f = lambda x: max(qj([x]) - Kr * qj([x]) * pjk([x]), 0.0)
        ref = normal_expectation_1d(f, st1.mu[0], st1.nu[0, 0]) / q0
        q = qg_caplet_price(econ, "usd", 0, 1, 2, kappa)
        assert abs(q.price - ref) < 1e-9


def test_caplet_black_with_model_vol():
    # linear model: the bond ratio is lognormal with log-variance (phi_j - phi_k)' nu_0j (phi_j - phi_k)
    econ = _linear_caplet_economy(vol=0.015)
    d = econ.phi["usd"][1] - econ.phi["usd"][2]
    total = math.sqrt(d @ econ.state(1).nu @ d)
    for kappa in (0.02, 0.03, 0.04):
        q = qg_caplet_price(econ, "usd", 0, 1, 2, kappa)
        F = 1 + 0.5 * q.forward
        expect = q.annuity / 0.5 * black(F, 1 + 0.5 * kappa, total)
        assert abs(q.price - expect) < 1e-13


def test_caplet_huge_strike_worthless():
    econ = _linear_caplet_economy()
    assert qg_caplet_price(econ, "usd", 0, 1, 2, 1e3).price < 1e-15


def test_caplet_index_errors():
    econ = _linear_caplet_economy()
    with pytest.raises(IndexOrder):
        qg_caplet_price(econ, "usd", 0, 2, 1, 0.03)
    with pytest.raises(IndexOrder):
        qg_caplet_price(econ, "usd", 0, 1, 1, 0.03)


def test_caplet_quadratic_mc_agrees():
    econ = random_economy(np.random.default_rng(11), n=4, d=1)
    q = qg_caplet_price(econ, "usd", 0, 2, 3, 0.02)
    m = qg_caplet_price(econ, "usd", 0, 2, 3, 0.02, mc=McConfig(paths=2**18))
    assert abs(q.price - m.price) < 5e-3 * q.price + 1e-6


# ---------------------------------------------------------------- classical comparators

def test_three_moment_sigma_example():
    assert abs(three_moment_sigma(1.0, 1.0, 0.98) - math.sqrt(0.0396)) < 1e-15
    mu, mv, muv = two_point_moments([0.5, 0.5], [1.0, 1.0], [1.0, 1.0])
    assert three_moment_sigma(mu, mv, muv) == 0.0


def test_three_moment_sigma_from_two_point_law():
    mu, mv, muv = two_point_moments([0.3, 0.7], [2.0, 0.5], [0.4, 1.2])
    s = three_moment_sigma(mu, mv, muv)
    assert abs(s**2 - (1 - muv**2 / (mu * mv))) < 1e-15


@pytest.mark.parametrize("m", [(1.0, 1.0, 1.5), (-1.0, 1.0, 0.5), (1.0, 0.0, 0.5)])
def test_moment_inconsistency(m):
    with pytest.raises(MomentInconsistency):
        three_moment_sigma(*m)


def test_classical_max_cases():
    assert classical_binomial_max(1.2, 1.0, 0.0) == pytest.approx(0.2, abs=1e-15)
    assert abs(classical_binomial_max(1.0, 1.0, 0.3) - 0.3) < 1e-6
    assert abs(classical_binomial_max(1.0, 1e-12, 0.3) - 1.0) < 1e-9


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 3), st.floats(0.05, 3), st.floats(0, 1))
def test_bound_dominance(F, K, sigma):
    c = classical_binomial_max(F, K, sigma)
    b = pricing.classical_option_bound(F, K, sigma)
    assert c <= b + 1e-9 and b <= F + 1e-12


def test_classical_max_achieves_bound():
    for K in np.linspace(0.5, 1.5, 11):
        assert abs(classical_binomial_max(1.0, K, 0.4) - option_bound(1.0, K, 0.4)) < 1e-9


def test_classical_max_accepts_moments():
    mu, mv, muv = two_point_moments([0.5, 0.5], [1.5, 0.5], [0.5, 1.5])
    s = three_moment_sigma(mu, mv, muv)
    assert classical_binomial_max(1.0, 1.0, (mu, mv, muv)) == classical_binomial_max(1.0, 1.0, s)


# ---------------------------------------------------------------- Dirac economy

def su2_econ(theta_a=0.0, theta_b=0.0, n=3, p=None):
    tl = Timeline(np.arange(n, dtype=float))
    w = RepState.driving(su2_fundamental(), [1.0, 0.0])
    p = p or {"a": [1.0, 0.98, 0.95][:n], "b": [1.0, 0.97, 0.93][:n]}
    xs = {
        "a": [su2_rotation(theta_a * k, "y") for k in range(n)],
        "b": [su2_rotation(theta_b * k, "x") for k in range(n)],
    }
    return DiracEconomy(tl, tuple([w] * (n - 1)), xs, p, {"a": 1.2, "b": 1.0})


def test_dirac_discount_factor_is_deterministic():
    econ = su2_econ(0.4, 0.7)
    for c in ("a", "b"):
        for i in range(3):
            for j in range(i, 3):
                df = dirac_discount_factor(econ, c, i, j)
                assert len(df.terms) == 1
                coef, y = df.terms[0]
                assert coef == econ.p[c][j] / econ.p[c][i]
                assert y.close_to(su2_identity())


def test_dirac_price_evolve_tower():
    econ = su2_econ(0.4, 0.7)
    y = su2_rotation(0.9, "z")
    a2, y2 = dirac_price_evolve(econ, "a", 1.0, y, 2, 1)
    a1, y1 = dirac_price_evolve(econ, "a", a2, y2, 1, 0)
    b1, z1 = dirac_price_evolve(econ, "a", 1.0, y, 2, 0)
    assert abs(a1 - b1) < 1e-14 and y1.close_to(z1)


def test_dirac_fx_identical_deflators_is_intrinsic():
    econ = su2_econ(0.0, 0.0)
    for kappa in (0.8, 1.0, 1.5):
        q = dirac_fx_option_price(econ, "a", "b", 2, kappa)
        f = 1.2 * 0.95 / 0.93
        assert q.sigma == 0.0
        assert abs(q.price - 0.93 * max(f - kappa, 0.0)) < 1e-14


def test_dirac_fx_perpendicular_deflators():
    econ = su2_econ(math.pi / 2, 0.0)  # rotation by pi at time 2
    q = dirac_fx_option_price(econ, "a", "b", 2, 1.0)
    assert abs(q.sigma - 1.0) < 1e-12
    assert abs(q.price - 0.93 * q.forward) < 1e-12


def test_dirac_fx_equals_bound():
    econ = su2_econ(0.3, 0.5)
    for kappa in np.linspace(0.5, 1.5, 7):
        q = dirac_fx_option_price(econ, "a", "b", 2, kappa)
        assert abs(q.price - q.annuity * option_bound(q.forward, kappa, q.sigma)) < 1e-9


def test_dirac_fx_monotone_convex():
    econ = su2_econ(0.3, 0.5)
    ks = np.linspace(0.0, 2.0, 41)
    prices = np.array([dirac_fx_option_price(econ, "a", "b", 2, k).price for k in ks])
    assert np.all(np.diff(prices) <= 1e-12)
    assert np.all(np.diff(prices, 2) >= -1e-9)


def test_dirac_ir_commuting_deflators_intrinsic():
    econ = su2_econ(0.0, 0.0)
    f = (0.98 / 0.95 - 1.0) / 1.0
    q = dirac_ir_option_price(econ, "a", 1, 2, 0.01)
    assert abs(q.forward - f) < 1e-15
    assert abs(q.price - 1.2 * 0.95 * max(f - 0.01, 0.0)) < 1e-14


def test_dirac_ir_positive_at_the_money():
    econ = su2_econ(0.3, 0.0)
    df = dirac_discount_factor(econ, "a", 1, 2)
    assert df.terms[0][0] == 0.95 / 0.98
    q = dirac_ir_option_price(econ, "a", 1, 2, (0.98 / 0.95 - 1.0))
    assert q.sigma > 0 and q.price > 1e-6


def test_dirac_ir_far_strike_limit():
    # the projection bound tends to F sigma^2, not zero, as the strike grows
    econ = su2_econ(0.3, 0.0)
    q = dirac_ir_option_price(econ, "a", 1, 2, 1e9)
    F = 0.98 / 0.95
    assert abs(q.price / q.annuity - F * q.sigma**2) < 1e-6


def test_dirac_restricted_finite_group():
    from hopfprice.algebra import cyclic_group
    from hopfprice.dirac import GroupElt, finite_regular_rep

    g = cyclic_group(4)
    rep = finite_regular_rep(g)
    w = RepState.driving(rep, np.array([0.5, 0.5, 0.5, 0.5]) * np.array([1, 1j, -1, 1j]) / 1.0)
    tl = Timeline([0.0, 1.0])
    xs = {"a": [GroupElt(g, 0), GroupElt(g, 1)], "b": [GroupElt(g, 0), GroupElt(g, 0)]}
    econ = DiracEconomy(tl, (w,), xs, {"a": [1.0, 1.0], "b": [1.0, 1.0]})
    full = dirac_fx_option_price(econ, "a", "b", 1, 1.0)
    res = dirac_fx_option_price(econ, "a", "b", 1, 1.0, restricted=True)
    assert res.price <= full.price + 1e-12
    assert res.price >= 0.0


def test_dirac_restricted_needs_finite_group():
    econ = su2_econ(0.3, 0.0)
    with pytest.raises(OutOfRange):
        dirac_fx_option_price(econ, "a", "b", 1, 1.0, restricted=True)


# ---------------------------------------------------------------- implied vol

def test_implied_vol_black_example():
    assert abs(implied_vol(0.0796557, 1.0, 1.0, 1.0) - 0.2) < 1e-6
    assert abs(implied_vol(black(1.0, 1.0, 0.2), 1.0, 1.0, 1.0) - 0.2) < 1e-8


def test_implied_vol_intrinsic():
    assert implied_vol(0.1, 1.1, 1.0, 1.0) == 0.0
    assert implied_vol(0.0, 1.0, 1.2, 1.0, "normal") == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 2), st.floats(0.5, 2), st.floats(0.02, 1.0), st.floats(0.1, 5))
def test_implied_vol_round_trip(F, K, vol, T):
    p = pricing.black_price(F, K, vol, T)
    if p - max(F - K, 0) < 1e-8:
        return
    v = implied_vol(p, F, K, T)
    assert abs(pricing.black_price(F, K, v, T) - p) <= 1e-10
    pn = pricing.bachelier_price(F, K, vol, T)
    vn = implied_vol(pn, F, K, T, "normal")
    assert abs(pricing.bachelier_price(F, K, vn, T) - pn) <= 1e-10


def test_pricers_match_oracles():
    assert abs(pricing.black_price(1.1, 0.9, 0.3, 2.0) - black(1.1, 0.9, 0.3 * math.sqrt(2))) < 1e-15
    assert abs(pricing.bachelier_price(0.03, 0.025, 0.01, 2.0) - bachelier(0.03, 0.025, 0.01 * math.sqrt(2))) < 1e-15


@pytest.mark.parametrize("price", [-0.5, 1.5, 0.05])
def test_implied_vol_no_root(price):
    # for F=1, K=0.9 the band is [0.1, 1)
    with pytest.raises(NoRoot):
        implied_vol(price, 1.0, 0.9, 1.0)
