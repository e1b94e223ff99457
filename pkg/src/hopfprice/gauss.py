"""Quadratic Gauss states and exponential-quadratic observables.

A state N(mu, nu) is a normal law on R^d.  An observable
E(alpha, phi, zeta) is the function x -> alpha * exp(phi.x + x.zeta.x / 2).
Products, convolutions, pairings, numeraire changes and conditional
valuations all stay inside these two families and act on the parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimMismatch, DimTooLarge, DomainViolation, NotCopositive, OutOfRange

DOMAIN_TOL = 1e-10
PSD_TOL = 1e-10
MAX_DIM = 8


def _sym(m):
    return 0.5 * (m + m.T)


def _vec(x, d=None):
    v = np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)
    if d is not None and len(v) != d:
        raise DimMismatch(f"expected length {d}, got {len(v)}")
    return v


def _mat(x, d):
    m = np.asarray(x, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.shape != (d, d):
        raise DimMismatch(f"expected a {d}x{d} matrix, got shape {m.shape}")
    return _sym(m)


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


@dataclass(frozen=True, eq=False)
class GaussState:
    mu: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        mu = _vec(self.mu)
        d = len(mu)
        if d > MAX_DIM:
            raise DimTooLarge(f"factor dimension {d} > {MAX_DIM}")
        nu = _mat(self.nu, d)
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(nu))):
            raise OutOfRange("state parameters must be finite")
        lam = np.linalg.eigvalsh(nu)
        if lam[0] < -PSD_TOL:
            raise NotCopositive(f"covariance has eigenvalue {lam[0]:.3e} < 0")
        _freeze(mu, nu)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)

    @property
    def dim(self) -> int:
        return len(self.mu)

    @classmethod
    def point(cls, d: int) -> "GaussState":
        return cls(np.zeros(d), np.zeros((d, d)))

    def to_json(self) -> dict:
        return {"mu": self.mu.tolist(), "nu": self.nu.tolist()}

    @classmethod
    def from_json(cls, obj) -> "GaussState":
        return cls(obj["mu"], obj["nu"])


@dataclass(frozen=True, eq=False)
class QuadObservable:
    alpha: float
    phi: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        phi = _vec(self.phi)
        d = len(phi)
        if d > MAX_DIM:
            raise DimTooLarge(f"factor dimension {d} > {MAX_DIM}")
        zeta = _mat(self.zeta, d)
        alpha = float(self.alpha)
        if not (math.isfinite(alpha) and np.all(np.isfinite(phi)) and np.all(np.isfinite(zeta))):
            raise OutOfRange("observable parameters must be finite")
        _freeze(phi, zeta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "zeta", zeta)

    @property
    def dim(self) -> int:
        return len(self.phi)

    @classmethod
    def unit(cls, d: int) -> "QuadObservable":
        return cls(1.0, np.zeros(d), np.zeros((d, d)))

    def scaled(self, c: float) -> "QuadObservable":
        return QuadObservable(self.alpha * c, self.phi, self.zeta)

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points ``x`` of shape (d,) or (m, d)."""
        x = np.asarray(x, dtype=float)
        lin = x @ self.phi
        quad = np.einsum("...i,ij,...j->...", x, self.zeta, x)
        return self.alpha * np.exp(lin + 0.5 * quad)

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "phi": self.phi.tolist(), "zeta": self.zeta.tolist()}

    @classmethod
    def from_json(cls, obj) -> "QuadObservable":
        return cls(obj.get("alpha", 1.0), obj["phi"], obj["zeta"])


@dataclass(frozen=True)
class DomainCheck:
    minEigen: float
    ok: bool


def _same_dim(*objs):
    d = objs[0].dim
    for o in objs[1:]:
        if o.dim != d:
            raise DimMismatch(f"dimensions {d} and {o.dim} differ")
    return d


def _sqrt_psd(nu):
    lam, V = np.linalg.eigh(nu)
    return (V * np.sqrt(np.clip(lam, 0.0, None))) @ V.T


def _similar_eigs(state: GaussState, obs: QuadObservable) -> np.ndarray:
    # I - nu zeta is similar to the symmetric I - nu^1/2 zeta nu^1/2
    r = _sqrt_psd(state.nu)
    return np.linalg.eigvalsh(np.eye(state.dim) - _sym(r @ obs.zeta @ r))


def qg_domain_check(state: GaussState, obs: QuadObservable) -> DomainCheck:
    _same_dim(state, obs)
    m = float(_similar_eigs(state, obs)[0])
    return DomainCheck(m, m > DOMAIN_TOL)


def _require_domain(state, obs):
    _same_dim(state, obs)
    lam = _similar_eigs(state, obs)
    if lam[0] <= DOMAIN_TOL:
        raise DomainViolation(
            f"I - nu zeta has eigenvalue {lam[0]:.3e}; pairing diverges", min_eigen=float(lam[0])
        )
    return lam


def _solve(A, b):
    return sla.lu_solve(sla.lu_factor(A), b)


def _pair_log(state, obs, lam, grouping=0):
    """Log of the pairing without alpha; ``grouping`` picks one of two equal forms."""
    d = state.dim
    I = np.eye(d)
    mu, nu, phi, zeta = state.mu, state.nu, obs.phi, obs.zeta
    A = I - nu @ zeta
    if grouping == 0:
        left = _solve(A, mu + nu @ phi) @ phi
        right = mu @ _solve(A.T, phi + zeta @ mu)
    else:
        # transpose each quadratic form: ((I - nu zeta)^-1)^T = (I - zeta nu)^-1
        left = phi @ _solve(A, mu + nu @ phi)
        right = (phi + zeta @ mu) @ _solve(A, mu)
    return 0.5 * (left + right) - 0.5 * float(np.sum(np.log(lam)))


def qg_pair(state: GaussState, obs: QuadObservable) -> float:
    """Expectation of the observable under the normal law."""
    lam = _require_domain(state, obs)
    if obs.alpha == 0.0:
        return 0.0
    return obs.alpha * math.exp(_pair_log(state, obs, lam))


def qg_multiply(a: QuadObservable, b: QuadObservable) -> QuadObservable:
    _same_dim(a, b)
    return QuadObservable(a.alpha * b.alpha, a.phi + b.phi, a.zeta + b.zeta)


def qg_convolve(s: GaussState, t: GaussState) -> GaussState:
    _same_dim(s, t)
    return GaussState(s.mu + t.mu, s.nu + t.nu)


def qg_numeraire_change(state: GaussState, obs: QuadObservable):
    """Return (scale, new state) with scale * <new|b> = <state|obs * b>."""
    lam = _require_domain(state, obs)
    A = np.eye(state.dim) - state.nu @ obs.zeta
    lu = sla.lu_factor(A)
    mu = sla.lu_solve(lu, state.mu + state.nu @ obs.phi)
    nu = _sym(sla.lu_solve(lu, state.nu))
    scale = obs.alpha * math.exp(_pair_log(state, obs, lam)) if obs.alpha else 0.0
    return scale, GaussState(mu, nu)


def qg_conditional_valuation(state: GaussState, obs: QuadObservable) -> QuadObservable:
    """Observable x -> integral of obs[x + y] against the state in y."""
    lam = _require_domain(state, obs)
    B = np.eye(state.dim) - obs.zeta @ state.nu
    lu = sla.lu_factor(B)
    phi = sla.lu_solve(lu, obs.phi + obs.zeta @ state.mu)
    zeta = _sym(sla.lu_solve(lu, obs.zeta))
    alpha = obs.alpha * math.exp(_pair_log(state, obs, lam)) if obs.alpha else 0.0
    return QuadObservable(alpha, phi, zeta)


# ---------------------------------------------------------------- Hopf maps

def _split(d2):
    if d2 % 2:
        raise DimMismatch(f"dimension {d2} is not a tensor square")
    return d2 // 2


def _obs_hopf(op, a: QuadObservable):
    d = a.dim
    if op == "involution":
        return a
    if op in ("coinvolution", "antipode"):
        return QuadObservable(a.alpha, -a.phi, a.zeta)
    if op == "counit":
        return a.alpha
    if op == "coproduct":
        return QuadObservable(a.alpha, np.concatenate([a.phi, a.phi]), np.block([[a.zeta, a.zeta], [a.zeta, a.zeta]]))
    if op == "product":
        h = _split(d)
        z = a.zeta
        return QuadObservable(a.alpha, a.phi[:h] + a.phi[h:], z[:h, :h] + z[:h, h:] + z[h:, :h] + z[h:, h:])
    raise ValueError(f"unknown operation {op!r}")


def _state_hopf(op, s: GaussState):
    d = s.dim
    if op in ("involution", "antipode"):
        return GaussState(-s.mu, s.nu)
    if op == "coinvolution":
        return s
    if op == "counit":
        return 1.0
    if op == "coproduct":
        return GaussState(np.concatenate([s.mu, s.mu]), np.block([[s.nu, s.nu], [s.nu, s.nu]]))
    if op == "product":
        h = _split(d)
        v = s.nu
        return GaussState(s.mu[:h] + s.mu[h:], v[:h, :h] + v[:h, h:] + v[h:, :h] + v[h:, h:])
    raise ValueError(f"unknown operation {op!r}")


def qg_hopf(op: str, *operands, dim: int | None = None, kind: str = "observable"):
    """Hopf structure maps on parameters.

    Two-operand ``product`` multiplies observables or convolves states; the
    one-operand form contracts a 2d tensor parameterization.  ``unit`` needs
    ``dim`` and ``kind``.
    """
    if op == "unit":
        if dim is None:
            raise ValueError("unit needs dim")
        return QuadObservable.unit(dim) if kind == "observable" else GaussState.point(dim)
    if not operands:
        raise ValueError(f"{op} needs an operand")
    if op == "product" and len(operands) == 2:
        a, b = operands
        if isinstance(a, QuadObservable) and isinstance(b, QuadObservable):
            return qg_multiply(a, b)
        if isinstance(a, GaussState) and isinstance(b, GaussState):
            return qg_convolve(a, b)
        raise DimMismatch("product operands must be of the same kind")
    if len(operands) != 1:
        raise ValueError(f"{op} takes one operand")
    x = operands[0]
    if isinstance(x, QuadObservable):
        return _obs_hopf(op, x)
    if isinstance(x, GaussState):
        return _state_hopf(op, x)
    raise TypeError(f"unsupported operand {type(x).__name__}")
