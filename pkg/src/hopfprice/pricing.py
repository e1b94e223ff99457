"""Economies, price evolution and option pricing.

Gauss economies: driving increments N(mu_ij, nu_ij) on consecutive
intervals and deflators with q*q = s p_i E(phi_i, zeta_i) / <N_i|E(phi_i, zeta_i)>
so that every initial discount factor is reproduced by construction.

Dirac economies: unitary driving states per interval, composed by tensor
products, and deflators sqrt(s p_i) d[x_i].

Times are indexed on an ascending timeline; the interval record m covers
[t_m, t_{m+1}].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import ndtr

from .dirac import (
    DiracObservable,
    RepState,
    dirac_martingale_step,
    option_bound,
    positive_part_trace,
    restricted_positive_part,
    semigroup_compose,
    sigma_from_vectors,
    trivial_rep,
)
from .errors import (
    DimMismatch,
    DimTooLarge,
    DomainViolation,
    IndexOrder,
    InvalidCorrelation,
    MomentInconsistency,
    NoRoot,
    OutOfRange,
)
from .gauss import (
    GaussState,
    QuadObservable,
    qg_conditional_valuation,
    qg_domain_check,
    qg_multiply,
    qg_numeraire_change,
    qg_pair,
)
from .quadrature import McConfig, covariance_factor, gauss_hermite_rule, integrate_gauss, mc_integrate

DEFAULT_NODES = 96
MAX_QUAD_DIM = 3
MOMENT_TOL = 1e-12


# ---------------------------------------------------------------- timeline

@dataclass(frozen=True, eq=False)
class Timeline:
    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        if len(t) < 1 or t[0] != 0.0:
            raise OutOfRange("timeline must start at t0 = 0")
        if np.any(np.diff(t) <= 0) or not np.all(np.isfinite(t)):
            raise OutOfRange("timeline must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    def __len__(self):
        return len(self.times)

    def accrual(self, i: int, j: int) -> float:
        return float(self.times[j] - self.times[i])

    def check(self, *idx):
        for k in idx:
            if not (0 <= k < len(self.times)):
                raise OutOfRange(f"time index {k} outside timeline of length {len(self.times)}")
        if list(idx) != sorted(idx):
            raise IndexOrder(f"time indices {idx} must be nondecreasing")


# ---------------------------------------------------------------- increments

@dataclass(frozen=True)
class GaussIncrements:
    mu: tuple
    nu: tuple


def _check_correlation(corr, d):
    c = np.atleast_2d(np.asarray(corr, dtype=float))
    if c.shape != (d, d):
        raise InvalidCorrelation(f"correlation must be {d}x{d}, got {c.shape}")
    if np.max(np.abs(c - c.T)) > 1e-12:
        raise InvalidCorrelation("correlation matrix is not symmetric")
    if np.max(np.abs(np.diag(c) - 1.0)) > 1e-12:
        raise InvalidCorrelation("correlation diagonal must be 1")
    if np.linalg.eigvalsh(c)[0] < -1e-10:
        raise InvalidCorrelation("correlation matrix is not positive semidefinite")
    return 0.5 * (c + c.T)


def build_gauss_increments(vols, mean_reversion, corr, timeline: Timeline, horizon: float | None = None) -> GaussIncrements:
    """Covariance of an exponentially damped factor over each interval.

    nu_ij[k, l] = rho_kl s_k s_l * integral over [t_i, t_j] of
    exp(-(a_k + a_l)(T - u)) du, with T the horizon (default: last time).
    Disjoint intervals add, so the schedule is additive by construction.
    """
    s = np.atleast_1d(np.asarray(vols, dtype=float))
    a = np.atleast_1d(np.asarray(mean_reversion, dtype=float))
    d = len(s)
    if len(a) != d:
        raise DimMismatch("vols and mean reversion rates differ in length")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(a))):
        raise OutOfRange("vols and mean reversion rates must be finite")
    rho = _check_correlation(corr, d)
    t = timeline.times
    T = float(t[-1]) if horizon is None else float(horizon)
    c = a[:, None] + a[None, :]
    base = rho * s[:, None] * s[None, :]
    mus, nus = [], []
    for m in range(len(t) - 1):
        lo, hi = T - t[m + 1], T - t[m]
        # integral of exp(-c v) for v in [lo, hi], stable as c -> 0
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(
                np.abs(c) > 1e-300,
                np.exp(-c * lo) * (-np.expm1(-c * (hi - lo))) / np.where(c == 0, 1.0, c),
                hi - lo,
            )
        nu = base * w
        mus.append(np.zeros(d))
        nus.append(0.5 * (nu + nu.T))
    return GaussIncrements(tuple(mus), tuple(nus))


# ---------------------------------------------------------------- quotes

@dataclass(frozen=True)
class OptionQuote:
    """Option price with the forward and strike it is quoted against.

    ``price`` = ``annuity`` * undiscounted price; implied vols refer to the
    undiscounted price with ``forward``, ``strike`` and ``expiry``.
    """

    expiry: float
    forward: float
    strike: float
    price: float
    annuity: float = 1.0
    sigma: float = float("nan")
    vol_normal: float = float("nan")
    vol_lognormal: float = float("nan")

    @property
    def undiscounted(self) -> float:
        return self.price / self.annuity if self.annuity else float("nan")


def _quote(expiry, forward, strike, price, annuity, sigma=float("nan")):
    und = price / annuity if annuity else float("nan")
    vn = safe_implied_vol(und, forward, strike, expiry, "normal")
    vl = safe_implied_vol(und, forward, strike, expiry, "lognormal")
    return OptionQuote(float(expiry), float(forward), float(strike), float(price), float(annuity), float(sigma), vn, vl)


def safe_implied_vol(price, F, K, T, convention):
    try:
        return implied_vol(price, F, K, T, convention)
    except (NoRoot, OutOfRange):
        return float("nan")


# ---------------------------------------------------------------- Gauss economy

def _domain_error(exc, what, i, j, ccy):
    return DomainViolation(f"{what} ({i}, {j}, {ccy}): {exc}", min_eigen=getattr(exc, "min_eigen", None))


@dataclass(frozen=True, eq=False)
class GaussEconomy:
    timeline: Timeline
    mu_inc: tuple
    nu_inc: tuple
    phi: dict
    zeta: dict
    p: dict
    s: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.timeline)
        if len(self.mu_inc) != n - 1 or len(self.nu_inc) != n - 1:
            raise DimMismatch(f"need {n - 1} interval increments")
        if not self.p:
            raise OutOfRange("economy needs at least one currency")
        d = None
        phi, zeta, p, s = {}, {}, {}, {}
        for ccy in self.p:
            ph = np.asarray(self.phi[ccy], dtype=float)
            if ph.ndim == 1:
                ph = ph[:, None]
            d = ph.shape[1] if d is None else d
            ze = np.asarray(self.zeta.get(ccy, np.zeros((n, d, d))), dtype=float)
            if ze.ndim == 1:
                ze = ze[:, None, None]
            elif ze.ndim == 2 and d == 1:
                ze = ze[:, :, None]
            if ph.shape != (n, d) or ze.shape != (n, d, d):
                raise DimMismatch(f"deflator coefficients for {ccy} must be ({n}, {d}) and ({n}, {d}, {d})")
            pc = np.asarray(self.p[ccy], dtype=float).reshape(-1)
            if pc.shape != (n,) or np.any(pc <= 0) or not np.all(np.isfinite(pc)):
                raise OutOfRange(f"discount factors for {ccy} must be {n} positive reals")
            sc = float(self.s.get(ccy, 1.0))
            if not (sc > 0 and math.isfinite(sc)):
                raise OutOfRange(f"spot for {ccy} must be positive")
            phi[ccy], zeta[ccy], p[ccy], s[ccy] = ph, 0.5 * (ze + ze.transpose(0, 2, 1)), pc, sc
        mus = tuple(np.atleast_1d(np.asarray(m, dtype=float)) for m in self.mu_inc)
        nus = tuple(np.atleast_2d(np.asarray(v, dtype=float)) for v in self.nu_inc)
        for m, v in zip(mus, nus):
            if m.shape != (d,) or v.shape != (d, d):
                raise DimMismatch(f"increments must have dimension {d}")
        for name, val in (("phi", phi), ("zeta", zeta), ("p", p), ("s", s), ("mu_inc", mus), ("nu_inc", nus)):
            object.__setattr__(self, name, val)
        # cumulative states and deflator normalizers
        cm, cv = [np.zeros(d)], [np.zeros((d, d))]
        for m, v in zip(mus, nus):
            cm.append(cm[-1] + m)
            cv.append(cv[-1] + v)
        object.__setattr__(self, "_states", tuple(GaussState(m, v) for m, v in zip(cm, cv)))
        norms = {}
        for ccy in p:
            vals = []
            for i in range(n):
                e = QuadObservable(1.0, phi[ccy][i], zeta[ccy][i])
                try:
                    vals.append(qg_pair(self._states[i], e))
                except DomainViolation as exc:
                    raise _domain_error(exc, "deflator", 0, i, ccy) from None
            norms[ccy] = np.array(vals)
        object.__setattr__(self, "_norms", norms)

    @property
    def dim(self) -> int:
        return len(self.mu_inc[0]) if self.mu_inc else self.phi[next(iter(self.phi))].shape[1]

    @property
    def currencies(self) -> list:
        return list(self.p)

    def state(self, i: int) -> GaussState:
        """Driving state N(mu_0i, nu_0i) from the origin at time 0."""
        return self._states[i]

    def increment(self, i: int, j: int) -> GaussState:
        self.timeline.check(i, j)
        d = self.dim
        mu = np.zeros(d) + sum(self.mu_inc[i:j], np.zeros(d))
        nu = np.zeros((d, d)) + sum(self.nu_inc[i:j], np.zeros((d, d)))
        return GaussState(mu, nu)

    def deflator_square(self, ccy: str, i: int) -> QuadObservable:
        """q*q at time i, normalized so that <N_i|q*q> = s p_i."""
        c = self.s[ccy] * self.p[ccy][i] / self._norms[ccy][i]
        return QuadObservable(c, self.phi[ccy][i], self.zeta[ccy][i])

    def normalized_deflator(self, ccy: str, i: int) -> QuadObservable:
        return QuadObservable(1.0 / self._norms[ccy][i], self.phi[ccy][i], self.zeta[ccy][i])

    @classmethod
    def from_json(cls, obj) -> "GaussEconomy":
        tl = Timeline(obj["timeline"])
        ccys = obj["currencies"]
        if "increments" in obj:
            inc = obj["increments"]
            mu = [np.asarray(m, dtype=float) for m in inc["mu"]]
            nu = [np.asarray(v, dtype=float) for v in inc["nu"]]
        else:
            f = obj["factors"]
            d = len(np.atleast_1d(f["vol"]))
            inc = build_gauss_increments(
                f["vol"], f.get("mean_reversion", [0.0] * d), f.get("correlation", np.eye(d)), tl, f.get("horizon")
            )
            mu, nu = list(inc.mu), list(inc.nu)
        phi = {c: v["phi"] for c, v in ccys.items()}
        zeta = {c: v["zeta"] for c, v in ccys.items() if "zeta" in v}
        p = {c: v["p"] for c, v in ccys.items()}
        s = {c: v.get("s", 1.0) for c, v in ccys.items()}
        return cls(tl, tuple(mu), tuple(nu), phi, zeta, p, s)


def qg_price_evolve(econ: GaussEconomy, ccy: str, terminal: QuadObservable, j: int, i: int) -> QuadObservable:
    """Price at time i (function of x_i) of the time-j payoff ``terminal`` in currency ``ccy``."""
    econ.timeline.check(i, j)
    if i == j:
        return terminal
    qj = econ.deflator_square(ccy, j)
    try:
        cond = qg_conditional_valuation(econ.increment(i, j), qg_multiply(qj, terminal))
    except DomainViolation as exc:
        raise _domain_error(exc, "conditional valuation", i, j, ccy) from None
    qi = econ.deflator_square(ccy, i)
    return QuadObservable(cond.alpha / qi.alpha, cond.phi - qi.phi, cond.zeta - qi.zeta)


def qg_discount_factor(econ: GaussEconomy, ccy: str, i: int, j: int) -> QuadObservable:
    """Discount factor p_ij as an observable of the state at time i."""
    if i > j:
        raise IndexOrder(f"discount factor needs i <= j, got ({i}, {j})")
    return qg_price_evolve(econ, ccy, QuadObservable.unit(econ.dim), j, i)


def qg_fx_rate(econ: GaussEconomy, a: str, b: str, i: int) -> QuadObservable:
    """Value in currency b of one unit of currency a at time i."""
    qa, qb = econ.deflator_square(a, i), econ.deflator_square(b, i)
    return QuadObservable(qa.alpha / qb.alpha, qa.phi - qb.phi, qa.zeta - qb.zeta)


def qg_spread_option_price(state: GaussState, F: float, A: QuadObservable, K: float, B: QuadObservable,
                           nodes: int = DEFAULT_NODES, mc: McConfig | None = None,
                           method: str = "split") -> float:
    """<N|(F A - K B)+>.

    The default ``split`` method writes the price as F P_A(R) - K P_B(R), with
    P_A, P_B the exercise-region probabilities under the numeraire-changed
    states, and integrates one direction exactly.  ``tensor`` applies the
    plain tensor rule to the kinked payoff; ``mc`` switches to Monte Carlo.
    """
    d = state.dim
    if A.dim != d or B.dim != d:
        raise DimMismatch("observables and state differ in dimension")
    if d > MAX_QUAD_DIM:
        raise DimTooLarge(f"quadrature pricing supports dimension <= {MAX_QUAD_DIM}, got {d}")
    for obs in (A, B):
        chk = qg_domain_check(state, obs)
        if not chk.ok:
            raise DomainViolation(f"payoff leg outside the pairing domain (min eigenvalue {chk.minEigen:.3e})",
                                  min_eigen=chk.minEigen)

    def payoff(X):
        return np.maximum(F * A(X) - K * B(X), 0.0)

    if mc is not None:
        return mc_integrate(state, payoff, mc)[0]
    if method == "tensor":
        return max(integrate_gauss(state, payoff, gauss_hermite_rule(nodes, d)), 0.0)
    fa, kb = F * A.alpha, K * B.alpha
    if kb <= 0.0:
        return max(F * qg_pair(state, A), 0.0) if fa > 0 else 0.0
    if fa <= 0.0:
        return 0.0
    # exercise region {log(F A) - log(K B) > 0} is a quadratic inequality
    g0 = math.log(fa / kb)
    g1 = A.phi - B.phi
    g2 = A.zeta - B.zeta
    total = 0.0
    for w, leg in ((F, A), (-K, B)):
        scale, st = qg_numeraire_change(state, leg)
        total += w * scale * _quadratic_region_probability(st, g0, g1, g2, nodes)
    return max(total, 0.0)


def _prob_quadratic_1d(a, b, c):
    """P(a t^2 + b t + c > 0) for standard normal t, vectorized over b and c."""
    b = np.asarray(b, dtype=float)
    c = np.broadcast_to(np.asarray(c, dtype=float), b.shape)
    out = np.empty(b.shape)
    if a == 0.0:
        nz = b != 0.0
        out[~nz] = (c[~nz] > 0).astype(float)
        out[nz] = ndtr(c[nz] / np.abs(b[nz]))
        return out
    disc = b * b - 4.0 * a * c
    real = disc > 0
    out[~real] = 1.0 if a > 0 else 0.0
    bb, cc = b[real], c[real]
    sq = np.sqrt(disc[real])
    q = -0.5 * (bb + np.where(bb >= 0, sq, -sq))
    r1 = q / a
    with np.errstate(divide="ignore"):
        r2 = np.where(q != 0, cc / np.where(q == 0, 1.0, q), 0.0)
    lo, hi = np.minimum(r1, r2), np.maximum(r1, r2)
    if a > 0:
        out[real] = ndtr(lo) + ndtr(-hi)
    else:
        out[real] = ndtr(hi) - ndtr(lo)
    return out


TAIL = 9.0  # standard deviations kept in each transverse direction
FIXED_BREAKS = (-6.0, -3.0, 0.0, 3.0, 6.0)  # keep pieces short relative to the Gaussian weight


def _quadratic_roots(a, b, c):
    """Real roots of a z^2 + b z + c = 0 (a may be zero)."""
    if a == 0.0:
        return [] if b == 0.0 else [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    if q == 0.0:
        return [0.0]
    return [q / a, c / q]


@lru_cache(maxsize=32)
def _cosine_legendre(n):
    # Gauss-Legendre on [0, 1] pushed through x = (1 - cos(pi u)) / 2, which
    # smooths square-root behaviour at both segment ends
    u, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (u + 1.0)
    x = 0.5 * (1.0 - np.cos(np.pi * u))
    dx = 0.25 * np.pi * np.sin(np.pi * u) * w
    return x, dx


def _segment_rule(breaks, n):
    pts = sorted({-TAIL, TAIL, *FIXED_BREAKS, *[z for z in breaks if -TAIL < z < TAIL]})
    x, dx = _cosine_legendre(n)
    nodes = np.concatenate([lo + (hi - lo) * x for lo, hi in zip(pts[:-1], pts[1:])])
    weights = np.concatenate([(hi - lo) * dx for lo, hi in zip(pts[:-1], pts[1:])])
    return nodes, weights * np.exp(-0.5 * nodes * nodes) / math.sqrt(2.0 * math.pi)


def _graded_breaks(a, b, cv, crit):
    """Points splitting z -> cv + a z^2 + b z into pieces on which the inner
    probability is smooth at the scale of the piece."""
    if a == 0.0:
        return [(s - cv) / b for s in crit] if b != 0.0 else []
    zv = -b / (2.0 * a)
    out = [zv]
    for s in crit:
        # cv + a z^2 + b z - s = a (z - zv)^2 + D
        D = cv - b * b / (4.0 * a) - s
        r = max(math.sqrt(abs(D / a)), 1e-12)
        # the roots (D < 0) or nearest approach (D > 0), then a geometric
        # grading that resolves a near-double root at the vertex
        reach = abs(zv) + 2.0 * TAIL
        out += [zv - r, zv + r]
        while r < reach:
            r *= 2.0
            out += [zv - r, zv + r]
    return out


def _separable_probability(c, a1, b1, rest, n):
    """P(c + a1 z1^2 + b1 z1 + sum_k (a_k z_k^2 + b_k z_k) > 0), independent standard z.

    z1 is integrated in closed form; the others by nested quadrature split
    where the inner probability loses smoothness.  Those points are the
    constants at which some inner quadratic acquires a double root.
    """
    crit = [b1 * b1 / (4.0 * a1)] if a1 != 0.0 else []
    levels = [crit]
    for a, b in rest[:-1]:
        crit = [s + b * b / (4.0 * a) for s in crit] if a != 0.0 else []
        levels.append(crit)

    def integrate(cvals, depth):
        if depth == 0:
            return _prob_quadratic_1d(a1, np.full(len(cvals), b1), cvals)
        a, b = rest[depth - 1]
        out = np.empty(len(cvals))
        for m, cv in enumerate(cvals):
            z, w = _segment_rule(_graded_breaks(a, b, cv, levels[depth - 1]), n)
            out[m] = np.dot(w, integrate(cv + a * z * z + b * z, depth - 1))
        return out

    return float(integrate(np.array([float(c)]), len(rest))[0])


def _quadratic_region_probability(state: GaussState, g0, g1, g2, nodes) -> float:
    """P(g0 + g1.x + x.g2.x / 2 > 0) under N(mu, nu).

    After whitening and rotating to the eigenbasis of the quadratic part the
    inequality is separable.  The direction with the largest curvature is
    integrated exactly and the others by piecewise Gauss-Legendre with
    ``nodes // 4`` points per smooth piece.
    """
    L = covariance_factor(state.nu)
    m = state.mu
    h0 = float(g0 + g1 @ m + 0.5 * m @ g2 @ m)
    h1 = L.T @ (g1 + g2 @ m)
    H = L.T @ g2 @ L
    lam, V = np.linalg.eigh(0.5 * (H + H.T))
    a = 0.5 * lam
    b = V.T @ h1
    size = max(float(np.max(np.abs(a))), float(np.linalg.norm(b)), 1e-300)
    a = np.where(np.abs(a) > 1e-14 * size, a, 0.0)
    flat = a == 0.0
    # linear directions combine into a single normal term
    s = float(np.linalg.norm(b[flat]))
    terms = [(float(x), float(y)) for x, y in zip(a[~flat], b[~flat])]
    if s > 0:
        terms.append((0.0, s))
    if not terms:
        return float(h0 > 0)
    terms.sort(key=lambda t: -abs(t[0]))
    (a1, b1), rest = terms[0], terms[1:]
    return _separable_probability(h0, a1, b1, rest, max(int(nodes) // 4, 8))


def qg_fx_option_price(econ: GaussEconomy, a: str, b: str, i: int, kappa: float,
                       nodes: int = DEFAULT_NODES, mc: McConfig | None = None) -> OptionQuote:
    """Option to receive one unit of a for kappa units of b at time i."""
    F = econ.s[a] * econ.p[a][i] / (econ.s[b] * econ.p[b][i])
    annuity = econ.s[b] * econ.p[b][i]
    und = qg_spread_option_price(econ.state(i), F, econ.normalized_deflator(a, i), kappa,
                                 econ.normalized_deflator(b, i), nodes, mc)
    return _quote(econ.timeline.times[i], F, kappa, annuity * und, annuity)


def qg_caplet_price(econ: GaussEconomy, ccy: str, i: int, j: int, k: int, kappa: float, x=None,
                    nodes: int = DEFAULT_NODES, mc: McConfig | None = None) -> OptionQuote:
    """Caplet fixing at j and paying at k, valued at time i in state x_i = ``x``.

    The payoff at j is (1 - (1 + kappa delta_jk) p_jk)+.  ``x`` defaults to
    the mean of the time-i state.  The quote is in rate terms: forward
    (F - 1)/delta with F the conditional bond ratio, strike kappa, and
    annuity delta * p_ik(x).
    """
    econ.timeline.check(i, j, k)
    if j == k:
        raise IndexOrder("caplet accrual period must be nonempty")
    delta = econ.timeline.accrual(j, k)
    st_i = econ.state(i)
    x = st_i.mu if x is None else np.atleast_1d(np.asarray(x, dtype=float))
    inc = econ.increment(i, j)
    local = GaussState(x + inc.mu, inc.nu)
    qj = econ.deflator_square(ccy, j)
    leg_b = qg_multiply(qj, qg_discount_factor(econ, ccy, j, k))
    try:
        PA, PB = qg_pair(local, qj), qg_pair(local, leg_b)
    except DomainViolation as exc:
        raise _domain_error(exc, "caplet", i, j, ccy) from None
    qi_x = float(econ.deflator_square(ccy, i)(x))
    F = PA / PB
    Kr = 1.0 + kappa * delta
    und = qg_spread_option_price(local, F, qj.scaled(1.0 / PA), Kr, leg_b.scaled(1.0 / PB), nodes, mc)
    annuity = delta * PB / qi_x
    return _quote(econ.timeline.accrual(i, j), (F - 1.0) / delta, kappa, annuity * und / delta, annuity)


# ---------------------------------------------------------------- classical comparators

def classical_option_bound(F: float, K: float, sigma: float) -> float:
    return option_bound(F, K, sigma)


def three_moment_sigma(m_u: float, m_v: float, m_uv: float) -> float:
    """sigma from <u>, <v> and <sqrt(uv)>: sigma^2 = 1 - <sqrt(uv)>^2 / (<u><v>)."""
    if not (m_u > 0 and m_v > 0 and m_uv >= 0):
        raise MomentInconsistency("moments must be positive")
    s2 = 1.0 - m_uv * m_uv / (m_u * m_v)
    if s2 < -MOMENT_TOL or s2 > 1.0 + MOMENT_TOL:
        raise MomentInconsistency(f"sigma^2 = {s2:.3e} outside [0, 1]")
    return math.sqrt(min(max(s2, 0.0), 1.0))


def binomial_price(F: float, K: float, sigma: float, phi: float) -> float:
    """E[(F u - K v)+] for the two-point law whose normalized root vectors are
    a = (cos phi, sin phi) and b rotated from a by arcsin(sigma)."""
    theta = math.asin(min(max(sigma, 0.0), 1.0))
    a = (math.cos(phi), math.sin(phi))
    b = (math.cos(phi + theta), math.sin(phi + theta))
    return sum(max(F * a[k] ** 2 - K * b[k] ** 2, 0.0) for k in range(2))


def classical_binomial_max(F: float, K: float, moments) -> float:
    """Largest E[(F u - K v)+] over two-point laws matching the three moments.

    ``moments`` is (<u>, <v>, <sqrt(uv)>) or a bare sigma.  Prices are per unit
    of <u> and <v>, i.e. F and K already carry the forward scaling.  The
    nonnegative two-point laws correspond to root vectors in the closed
    positive quadrant, so the rotation phi ranges over [0, pi/2 - theta].
    """
    if np.ndim(moments) == 0:
        sigma = float(moments)
        if not (0.0 <= sigma <= 1.0):
            raise MomentInconsistency(f"sigma {sigma} outside [0, 1]")
    else:
        sigma = three_moment_sigma(*moments)
    if F < 0 or K < 0:
        raise OutOfRange("F and K must be nonnegative")
    theta = math.asin(sigma)
    hi = max(0.5 * math.pi - theta, 0.0)
    if hi == 0.0:
        return binomial_price(F, K, sigma, 0.0)
    grid = np.linspace(0.0, hi, 257)
    vals = np.array([binomial_price(F, K, sigma, g) for g in grid])
    best = int(np.argmax(vals))
    lo_b, hi_b = grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)]
    res = minimize_scalar(lambda g: -binomial_price(F, K, sigma, g), bounds=(lo_b, hi_b),
                          method="bounded", options={"xatol": 1e-12})
    return float(max(vals[best], -res.fun))


# ---------------------------------------------------------------- Dirac economy

@dataclass(frozen=True, eq=False)
class DiracEconomy:
    timeline: Timeline
    intervals: tuple
    deflators: dict
    p: dict
    s: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.timeline)
        if len(self.intervals) != n - 1:
            raise DimMismatch(f"need {n - 1} interval driving states")
        for w in self.intervals:
            if not w.is_driving:
                raise OutOfRange("interval states must be driving states with unit vectors")
        p, s = {}, {}
        for ccy, xs in self.deflators.items():
            if len(xs) != n:
                raise DimMismatch(f"{ccy} needs one deflator element per time")
            pc = np.asarray(self.p[ccy], dtype=float).reshape(-1)
            if pc.shape != (n,) or np.any(pc <= 0):
                raise OutOfRange(f"discount factors for {ccy} must be {n} positive reals")
            p[ccy] = pc
            s[ccy] = float(self.s.get(ccy, 1.0))
            if s[ccy] <= 0:
                raise OutOfRange(f"spot for {ccy} must be positive")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "s", s)

    @property
    def kind(self) -> str:
        return self.intervals[0].rep.kind if self.intervals else "su2"

    def driving(self, i: int, j: int) -> RepState:
        """Composed driving state over [t_i, t_j], later intervals on the left."""
        self.timeline.check(i, j)
        if i == j:
            first = self.intervals[0].rep if self.intervals else None
            rep = trivial_rep(first.kind, first.group) if first else trivial_rep()
            return RepState.driving(rep, [1.0])
        w = self.intervals[i]
        for m in range(i + 1, j):
            w = semigroup_compose(self.intervals[m], w)
        return w

    @cached_property
    def _from_origin(self) -> list:
        return [self.driving(0, i) for i in range(len(self.timeline))]

    def state(self, i: int) -> RepState:
        return self._from_origin[i]

    def deflator(self, ccy: str, i: int) -> DiracObservable:
        return DiracObservable.delta(self.deflators[ccy][i], math.sqrt(self.s[ccy] * self.p[ccy][i]))


def dirac_price_evolve(econ: DiracEconomy, ccy: str, alpha_j: float, y_j, j: int, i: int):
    """(alpha_i, y_i) of the time-i price of alpha_j d[y_j] paid at time j."""
    econ.timeline.check(i, j)
    if i == j:
        return alpha_j, y_j
    xs, p = econ.deflators[ccy], econ.p[ccy]
    return dirac_martingale_step(alpha_j, y_j, xs[j], xs[i], p[j], p[i], econ.driving(i, j))


def dirac_discount_factor(econ: DiracEconomy, ccy: str, i: int, j: int) -> DiracObservable:
    if i > j:
        raise IndexOrder(f"discount factor needs i <= j, got ({i}, {j})")
    one = econ.deflators[ccy][j].identity()
    alpha, y = dirac_price_evolve(econ, ccy, 1.0, one, j, i)
    return DiracObservable.delta(y, alpha)


def _exercise_value(M, state: RepState, restricted: bool):
    if not restricted:
        return positive_part_trace(M)[0]
    if state.rep.kind != "finite":
        raise OutOfRange("restricted exercise is available for finite groups only")
    g = state.rep.group
    from .dirac import GroupElt

    mats = [state.rep(GroupElt(g, x)) for x in range(g.order)]
    return restricted_positive_part(M, mats)[0]


def dirac_fx_option_price(econ: DiracEconomy, a: str, b: str, i: int, kappa: float,
                          restricted: bool = False) -> OptionQuote:
    """Option to receive one unit of a for kappa units of b at time i.

    With ``restricted`` (finite groups only) exercise is limited to
    projections in the algebra generated by the representation; otherwise
    all projections are allowed and the price is the closed-form bound.
    """
    w = econ.state(i)
    ua = w.rep(econ.deflators[a][i]) @ w.u
    ub = w.rep(econ.deflators[b][i]) @ w.u
    f = econ.s[a] * econ.p[a][i] / (econ.s[b] * econ.p[b][i])
    M = f * np.outer(ua, ua.conj()) - kappa * np.outer(ub, ub.conj())
    annuity = econ.s[b] * econ.p[b][i]
    val = _exercise_value(M, w, restricted)
    return _quote(econ.timeline.times[i], f, kappa, annuity * val, annuity, sigma_from_vectors(ua, ub))


def dirac_ir_option_price(econ: DiracEconomy, a: str, i: int, j: int, kappa: float,
                          restricted: bool = False) -> OptionQuote:
    """Option at time i to receive 1 at i for 1 + kappa delta_ij at j.

    Quoted in rate terms: forward f = (p_i/p_j - 1)/delta, strike kappa,
    annuity s p_j delta.
    """
    econ.timeline.check(i, j)
    if i == j:
        raise IndexOrder("interest rate option needs j > i")
    delta = econ.timeline.accrual(i, j)
    w = econ.state(i)
    ui = w.rep(econ.deflators[a][i]) @ w.u
    uji = w.rep(econ.deflators[a][j]) @ w.u
    F = econ.p[a][i] / econ.p[a][j]
    K = 1.0 + kappa * delta
    M = F * np.outer(ui, ui.conj()) - K * np.outer(uji, uji.conj())
    val = _exercise_value(M, w, restricted)
    annuity = econ.s[a] * econ.p[a][j] * delta
    f = (F - 1.0) / delta
    return _quote(econ.timeline.times[i], f, kappa, annuity * val / delta, annuity, sigma_from_vectors(ui, uji))


# ---------------------------------------------------------------- implied vol

def black_price(F, K, vol, T):
    """Undiscounted Black call."""
    s = vol * math.sqrt(T)
    if s <= 0:
        return max(F - K, 0.0)
    if K <= 0:
        return F - K
    d1 = (math.log(F / K) + 0.5 * s * s) / s
    return float(F * ndtr(d1) - K * ndtr(d1 - s))


def bachelier_price(F, K, vol, T):
    """Undiscounted Bachelier call."""
    s = vol * math.sqrt(T)
    if s <= 0:
        return max(F - K, 0.0)
    d = (F - K) / s
    return float((F - K) * ndtr(d) + s * math.exp(-0.5 * d * d) / math.sqrt(2 * math.pi))


def _vega(F, K, s, convention):
    # derivative with respect to total vol s = vol sqrt(T)
    if convention == "lognormal":
        d1 = (math.log(F / K) + 0.5 * s * s) / s
        return F * math.exp(-0.5 * d1 * d1) / math.sqrt(2 * math.pi)
    d = (F - K) / s
    return math.exp(-0.5 * d * d) / math.sqrt(2 * math.pi)


def implied_vol(price: float, F: float, K: float, expiry: float, convention: str = "lognormal",
                tol: float = 1e-10, max_iter: int = 100) -> float:
    """Vol reproducing an undiscounted call price under Black or Bachelier."""
    if convention not in ("normal", "lognormal"):
        raise OutOfRange(f"unknown convention {convention!r}")
    if not all(map(math.isfinite, (price, F, K, expiry))) or expiry < 0:
        raise OutOfRange("inputs must be finite with expiry >= 0")
    if convention == "lognormal" and (F <= 0 or K <= 0):
        raise NoRoot("lognormal vol needs positive forward and strike")
    intrinsic = max(F - K, 0.0)
    upper = F if convention == "lognormal" else math.inf
    if price < intrinsic - tol or price >= upper:
        raise NoRoot(f"price {price:.12g} outside the arbitrage band [{intrinsic:.12g}, {upper:.12g})")
    if price - intrinsic <= tol:
        return 0.0
    if expiry == 0:
        raise NoRoot("zero expiry admits only the intrinsic price")
    pricer = black_price if convention == "lognormal" else bachelier_price
    f = lambda s: pricer(F, K, s, 1.0) - price

    lo, hi = 0.0, 1.0 if convention == "lognormal" else max(abs(F), abs(K), 1e-2)
    while f(hi) < 0:
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            raise NoRoot("no volatility reproduces the price")
    s = 0.5 * (lo + hi)
    for _ in range(max_iter):
        err = f(s)
        if abs(err) <= tol:
            return s / math.sqrt(expiry)
        if err > 0:
            hi = s
        else:
            lo = s
        v = _vega(F, K, s, convention)
        step = s - err / v if v > 0 else math.nan
        s = step if lo < step < hi else 0.5 * (lo + hi)
    if abs(f(s)) <= 10 * tol:
        return s / math.sqrt(expiry)
    raise NoRoot("implied vol did not converge")
