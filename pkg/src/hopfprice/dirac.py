"""Linear Dirac observables and representative-function states.

Observables are finite formal sums of group elements, sum_n c_n d[x_n],
multiplied by the group law.  States are matrix coefficients <u|pi[.]|v> of
a unitary representation.  Groups are either SU(2), with elements stored as
2x2 unitaries, or a finite group given by its Cayley table.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import FiniteGroup, regular_representation
from .errors import DimMismatch, DimOverflow, GroupMismatch, NotHermitian, NotUnit, OutOfRange

MERGE_TOL = 1e-12
UNITARY_TOL = 1e-12
REP_TOL = 1e-10
UNIT_TOL = 1e-10
MAX_HILBERT_DIM = 256

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


# ---------------------------------------------------------------- elements

@dataclass(frozen=True, eq=False)
class SU2Element:
    matrix: np.ndarray

    kind = "su2"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise OutOfRange(f"SU(2) element must be 2x2, got {m.shape}")
        if np.max(np.abs(m.conj().T @ m - np.eye(2))) > UNITARY_TOL:
            raise OutOfRange("matrix is not unitary")
        if abs(np.linalg.det(m) - 1.0) > UNITARY_TOL:
            raise OutOfRange("matrix does not have determinant 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __mul__(self, other: "SU2Element") -> "SU2Element":
        _check_kind(self, other)
        return SU2Element(self.matrix @ other.matrix)

    def inverse(self) -> "SU2Element":
        return SU2Element(self.matrix.conj().T)

    def close_to(self, other) -> bool:
        return other.kind == "su2" and np.linalg.norm(self.matrix - other.matrix) <= MERGE_TOL

    def identity(self) -> "SU2Element":
        return SU2Element(np.eye(2))

    def to_json(self):
        return [[[z.real, z.imag] for z in row] for row in self.matrix]


@dataclass(frozen=True, eq=False)
class GroupElt:
    group: FiniteGroup
    index: int

    kind = "finite"

    def __post_init__(self):
        if not (0 <= int(self.index) < self.group.order):
            raise OutOfRange(f"element index {self.index} outside group of order {self.group.order}")
        object.__setattr__(self, "index", int(self.index))

    def __mul__(self, other: "GroupElt") -> "GroupElt":
        _check_kind(self, other)
        return GroupElt(self.group, self.group.mult[self.index, other.index])

    def inverse(self) -> "GroupElt":
        return GroupElt(self.group, self.group.inv[self.index])

    def close_to(self, other) -> bool:
        return other.kind == "finite" and other.group.same_as(self.group) and other.index == self.index

    def identity(self) -> "GroupElt":
        return GroupElt(self.group, self.group.identity)

    def to_json(self):
        return self.index


def _check_kind(x, y):
    if x.kind != y.kind or (x.kind == "finite" and not x.group.same_as(y.group)):
        raise GroupMismatch("elements belong to different groups")


def su2_rotation(theta: float, axis: str = "y") -> SU2Element:
    """exp(-i theta sigma_axis / 2)."""
    sig = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}[axis]
    return SU2Element(np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * sig)


def su2_identity() -> SU2Element:
    return SU2Element(np.eye(2))


def su2_from_json(obj) -> SU2Element:
    """Parse a 2x2 matrix of [re, im] pairs, or {"theta": t, "axis": a}."""
    if isinstance(obj, dict):
        return su2_rotation(float(obj["theta"]), obj.get("axis", "y"))
    arr = np.asarray(obj, dtype=float)
    if arr.shape == (2, 2, 2):
        return SU2Element(arr[..., 0] + 1j * arr[..., 1])
    return SU2Element(arr)


# ---------------------------------------------------------------- observables

@dataclass(frozen=True, eq=False)
class DiracObservable:
    terms: tuple

    def __post_init__(self):
        merged: list = []
        for c, x in self.terms:
            c = complex(c)
            for k, (c0, x0) in enumerate(merged):
                if x0.close_to(x):
                    merged[k] = (c0 + c, x0)
                    break
            else:
                if merged:
                    _check_kind(merged[0][1], x)
                merged.append((c, x))
        object.__setattr__(self, "terms", tuple((c, x) for c, x in merged if c != 0))

    @classmethod
    def delta(cls, x, coef=1.0) -> "DiracObservable":
        return cls(((coef, x),))

    def coefficient(self, x) -> complex:
        for c, y in self.terms:
            if y.close_to(x):
                return c
        return 0j

    def scaled(self, c) -> "DiracObservable":
        return DiracObservable(tuple((c * a, x) for a, x in self.terms))

    def __add__(self, other: "DiracObservable") -> "DiracObservable":
        return DiracObservable(self.terms + other.terms)

    def close_to(self, other: "DiracObservable", tol: float = 1e-12) -> bool:
        diff = self + other.scaled(-1.0)
        return all(abs(c) <= tol for c, _ in diff.terms)


def dirac_product(a: DiracObservable, b: DiracObservable) -> DiracObservable:
    """Bilinear extension of d[x] d[y] = d[xy]."""
    return DiracObservable(tuple((ca * cb, x * y) for ca, x in a.terms for cb, y in b.terms))


def dirac_involution(a: DiracObservable) -> DiracObservable:
    """Conjugate-linear extension of d[x]* = d[x^-1]."""
    return DiracObservable(tuple((np.conj(c), x.inverse()) for c, x in a.terms))


# ---------------------------------------------------------------- representations

@dataclass(frozen=True, eq=False)
class UnitaryRep:
    hilbertDim: int
    apply: Callable
    kind: str = "su2"
    group: FiniteGroup | None = None

    def __call__(self, x) -> np.ndarray:
        if x.kind != self.kind or (self.kind == "finite" and not x.group.same_as(self.group)):
            raise GroupMismatch("element does not belong to the represented group")
        return self.apply(x)


def su2_fundamental() -> UnitaryRep:
    return UnitaryRep(2, lambda x: x.matrix, "su2")


def trivial_rep(kind: str = "su2", group: FiniteGroup | None = None) -> UnitaryRep:
    return UnitaryRep(1, lambda x: np.ones((1, 1), dtype=complex), kind, group)


def finite_rep(group: FiniteGroup, matrices) -> UnitaryRep:
    """Unitary representation of a finite group from one matrix per element."""
    mats = [np.asarray(m, dtype=complex) for m in matrices]
    if len(mats) != group.order:
        raise DimMismatch(f"{len(mats)} matrices for a group of order {group.order}")
    d = mats[0].shape[0]
    for m in mats:
        if m.shape != (d, d):
            raise DimMismatch("representation matrices must share one square shape")
    if np.max(np.abs(mats[group.identity] - np.eye(d))) > REP_TOL:
        raise OutOfRange("identity is not represented by the identity matrix")
    for x in range(group.order):
        if np.max(np.abs(mats[x].conj().T @ mats[x] - np.eye(d))) > REP_TOL:
            raise OutOfRange(f"matrix of element {group.label(x)} is not unitary")
        for y in range(group.order):
            if np.max(np.abs(mats[x] @ mats[y] - mats[group.mult[x, y]])) > REP_TOL:
                raise OutOfRange(f"pi({group.label(x)})pi({group.label(y)}) != pi(product)")
    for m in mats:
        m.setflags(write=False)
    return UnitaryRep(d, lambda x: mats[x.index], "finite", group)


def finite_regular_rep(group: FiniteGroup) -> UnitaryRep:
    return finite_rep(group, regular_representation(group))


def rep_tensor(r1: UnitaryRep, r2: UnitaryRep) -> UnitaryRep:
    """x -> pi1[x] (x) pi2[x]."""
    if r1.kind != r2.kind or (r1.kind == "finite" and not r1.group.same_as(r2.group)):
        raise GroupMismatch("representations of different groups")
    d = r1.hilbertDim * r2.hilbertDim
    if d > MAX_HILBERT_DIM:
        raise DimOverflow(f"tensor Hilbert dimension {d} > {MAX_HILBERT_DIM}")
    return UnitaryRep(d, lambda x: np.kron(r1(x), r2(x)), r1.kind, r1.group)


def rep_extend(a: DiracObservable, rep: UnitaryRep) -> np.ndarray:
    """sum_n c_n pi[x_n]."""
    out = np.zeros((rep.hilbertDim, rep.hilbertDim), dtype=complex)
    for c, x in a.terms:
        out += c * rep(x)
    return out


def check_rep(rep: UnitaryRep, elements, tol: float = REP_TOL) -> float:
    """Largest deviation from the representation laws over sampled pairs."""
    dev = 0.0
    I = np.eye(rep.hilbertDim)
    if elements:
        dev = max(dev, float(np.max(np.abs(rep(elements[0].identity()) - I))))
    for x in elements:
        px = rep(x)
        dev = max(dev, float(np.max(np.abs(rep(x.inverse()) - px.conj().T))))
        for y in elements:
            dev = max(dev, float(np.max(np.abs(rep(x * y) - px @ rep(y)))))
    return dev


# ---------------------------------------------------------------- states

@dataclass(frozen=True, eq=False)
class RepState:
    rep: UnitaryRep
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex).reshape(-1)
        v = np.asarray(self.v, dtype=complex).reshape(-1)
        if len(u) != self.rep.hilbertDim or len(v) != self.rep.hilbertDim:
            raise DimMismatch(f"vectors must have length {self.rep.hilbertDim}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def driving(cls, rep: UnitaryRep, u) -> "RepState":
        """State <u|pi|u> for a unit vector u."""
        u = np.asarray(u, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
            raise NotUnit(f"driving vector has norm {np.linalg.norm(u):.12g}")
        return cls(rep, u, u)

    @property
    def is_driving(self) -> bool:
        return np.allclose(self.u, self.v, atol=UNIT_TOL, rtol=0) and abs(np.linalg.norm(self.u) - 1) <= UNIT_TOL


def dirac_pair(x, state: RepState) -> complex:
    """<u|pi[x]|v>, extended linearly over observables."""
    if isinstance(x, DiracObservable):
        return complex(np.vdot(state.u, rep_extend(x, state.rep) @ state.v))
    return complex(np.vdot(state.u, state.rep(x) @ state.v))


def dirac_numeraire_change(x, state: RepState) -> RepState:
    """Numeraire d[x]: rotate both vectors by pi[x]."""
    P = state.rep(x)
    return RepState(state.rep, P @ state.u, P @ state.v)


def dirac_conditional_valuation(x, state: RepState):
    """d[x] scaled by its valuation; returns (scale, x) or a scaled observable."""
    if isinstance(x, DiracObservable):
        return DiracObservable(tuple((c * dirac_pair(y, state), y) for c, y in x.terms))
    return dirac_pair(x, state), x


def semigroup_compose(w_kj: RepState, w_ji: RepState) -> RepState:
    """Driving state over [i, k] from the later interval [j, k] and the earlier [i, j]."""
    for w in (w_kj, w_ji):
        if not w.is_driving:
            raise NotUnit("semigroup composition needs driving states (u = v, unit norm)")
    rep = rep_tensor(w_kj.rep, w_ji.rep)
    u = np.kron(w_kj.u, w_ji.u)
    return RepState(rep, u, u)


# ---------------------------------------------------------------- option bounds

def positive_part_trace(M):
    """tr[M+] and the projection onto the positive eigenspace attaining it."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotHermitian("matrix must be square")
    norm = float(np.max(np.abs(M))) if M.size else 0.0
    if np.max(np.abs(M - M.conj().T)) > UNITARY_TOL * max(1.0, norm):
        raise NotHermitian("matrix is not Hermitian")
    lam, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    cut = 1e-12 * (float(np.max(np.abs(lam))) if lam.size else 0.0)
    pos = lam > cut
    E = V[:, pos] @ V[:, pos].conj().T
    return float(np.sum(lam[pos])), E


def restricted_positive_part(M, matrices):
    """Supremum of tr[M E] over projections E in the algebra spanned by ``matrices``.

    For a finite group the algebra generated by pi[G] is the linear span of
    the matrices.  Writing P for the trace-orthogonal projection onto that
    span, tr[M E] = tr[P(M) E] for every E in it, and P(M) is Hermitian and
    lies in it, so the supremum is tr[P(M)+] with its spectral projection.
    """
    M = np.asarray(M, dtype=complex)
    d = M.shape[0]
    A = np.array([np.asarray(m, dtype=complex).reshape(-1) for m in matrices]).T
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    basis = U[:, s > 1e-10 * s[0]]
    PM = (basis @ (basis.conj().T @ M.reshape(-1))).reshape(d, d)
    return positive_part_trace(0.5 * (PM + PM.conj().T))


def _check_fks(F, K, sigma):
    for name, val in (("F", F), ("K", K)):
        if not np.isfinite(val) or val < 0:
            raise OutOfRange(f"{name} must be a nonnegative real, got {val}")
    if not np.isfinite(sigma) or not (0.0 <= sigma <= 1.0):
        raise OutOfRange(f"sigma must lie in [0, 1], got {sigma}")


def option_bound(F: float, K: float, sigma: float) -> float:
    """Positive eigenvalue of F|a><a| - K|b><b| with |<a|b>|^2 = 1 - sigma^2."""
    F, K, sigma = float(F), float(K), float(sigma)
    _check_fks(F, K, sigma)
    d = F - K
    if sigma == 0.0:
        return max(d, 0.0)
    r = np.hypot(d, 2.0 * np.sqrt(F * K) * sigma)
    if d >= 0:
        return 0.5 * (d + r)
    # the eigenvalues multiply to -F K sigma^2; avoids cancellation for d < 0
    return 2.0 * F * K * sigma * sigma / (r - d)


def sigma_from_vectors(u, v) -> float:
    u = np.asarray(u, dtype=complex).reshape(-1)
    v = np.asarray(v, dtype=complex).reshape(-1)
    if len(u) != len(v):
        raise DimMismatch("vectors differ in length")
    for w in (u, v):
        if abs(np.linalg.norm(w) - 1.0) > UNIT_TOL:
            raise NotUnit(f"vector has norm {np.linalg.norm(w):.12g}")
    return float(np.sqrt(max(0.0, 1.0 - abs(np.vdot(u, v)) ** 2)))


def dirac_martingale_step(alpha_j: float, y_j, x_j, x_i, p_j: float, p_i: float, w_ji: RepState):
    """Normalization and element at time i of the price alpha_j d[y_j] at time j."""
    one = y_j.identity()
    if y_j.close_to(one):
        # unit vectors make the pairing of the identity exactly 1
        return alpha_j * (p_j / p_i), one
    g = x_j * x_i.inverse()
    y_i = g.inverse() * y_j * g
    rotated = dirac_numeraire_change(x_j, w_ji)
    alpha_i = alpha_j * (p_j / p_i) * dirac_pair(y_j, rotated)
    return alpha_i, y_i
