"""Function and measure *-Hopf algebras on finite groups.

Functions on a group carry the pointwise product with the coproduct
(Delta a)[x, y] = a[xy]; measures carry convolution with the diagonal
coproduct.  Elements of a tensor square live on the direct product group
with index x * order + y.

The axiom checker represents every structure map as a sparse 0/1 matrix
together with a flag marking conjugate-linear maps.  Since all matrices are
real, conjugation commutes with them and compositions stay in that form.
Two maps are compared on every basis tuple ``e`` and on ``i * e``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import (
    GroupMismatch,
    InvalidGroup,
    NoIdentity,
    NoInverse,
    NonAssociative,
    NotCopositive,
    SizeLimit,
)

AXIOM_TOL = 1e-12
PSD_TOL = 1e-10
RANK_RTOL = 1e-10
MAX_AXIOM_ORDER = 24

FUNCTIONS = "functions"
MEASURES = "measures"
SIDES = (FUNCTIONS, MEASURES)


# ---------------------------------------------------------------- groups

@dataclass(frozen=True, eq=False)
class FiniteGroup:
    order: int
    mult: np.ndarray
    inv: np.ndarray
    identity: int
    labels: tuple = ()
    factors: tuple = ()

    def same_as(self, other: "FiniteGroup") -> bool:
        return self is other or (
            self.order == other.order and np.array_equal(self.mult, other.mult)
        )

    def label(self, x: int) -> str:
        return str(self.labels[x]) if self.labels else str(x)

    @cached_property
    def square(self) -> "FiniteGroup":
        return direct_product(self, self)

    def to_json(self) -> dict:
        out = {"order": self.order, "mult": self.mult.tolist()}
        if self.labels:
            out["labels"] = list(self.labels)
        return out


def validate_group(table, labels=None) -> FiniteGroup:
    """Check a Cayley table and return the group it defines."""
    try:
        raw = np.asarray(table)
        mult = raw.astype(np.int64)
    except (TypeError, ValueError) as exc:
        raise InvalidGroup(f"table is not an integer array: {exc}") from None
    if raw.size and not np.array_equal(raw, mult):
        raise InvalidGroup("table entries must be integers")
    if mult.ndim != 2 or mult.shape[0] != mult.shape[1] or mult.shape[0] == 0:
        raise InvalidGroup(f"table must be square and nonempty, got shape {mult.shape}")
    n = mult.shape[0]
    if mult.min() < 0 or mult.max() >= n:
        raise InvalidGroup("table entries must be element indices in range")
    if labels is not None and len(labels) != n:
        raise InvalidGroup(f"{len(labels)} labels for a group of order {n}")
    lab = tuple(labels) if labels is not None else ()

    def name(x):
        return str(lab[x]) if lab else str(x)

    # associativity on every triple
    left = mult[mult[:, :, None], np.arange(n)[None, None, :]]
    right = mult[np.arange(n)[:, None, None], mult[None, :, :]]
    bad = np.argwhere(left != right)
    if len(bad):
        x, y, z = bad[0]
        raise NonAssociative(
            f"({name(x)}*{name(y)})*{name(z)} != {name(x)}*({name(y)}*{name(z)})"
        )
    ar = np.arange(n)
    ids = [e for e in range(n) if np.array_equal(mult[e], ar) and np.array_equal(mult[:, e], ar)]
    if not ids:
        raise NoIdentity("no element acts neutrally on both sides")
    e = ids[0]
    inv = np.empty(n, dtype=np.int64)
    for x in range(n):
        cands = np.flatnonzero((mult[x] == e) & (mult[:, x] == e))
        if not len(cands):
            raise NoInverse(f"element {name(x)} has no two-sided inverse")
        inv[x] = cands[0]
    mult.setflags(write=False)
    inv.setflags(write=False)
    return FiniteGroup(n, mult, inv, e, lab)


def direct_product(g: FiniteGroup, h: FiniteGroup) -> FiniteGroup:
    n, m = g.order, h.order
    gx = np.repeat(np.arange(n), m)
    hy = np.tile(np.arange(m), n)
    mult = g.mult[gx[:, None], gx[None, :]] * m + h.mult[hy[:, None], hy[None, :]]
    inv = g.inv[gx] * m + h.inv[hy]
    mult.setflags(write=False)
    inv.setflags(write=False)
    return FiniteGroup(n * m, mult, inv, g.identity * m + h.identity, (), (g, h))


def group_from_permutations(perms, labels=None) -> FiniteGroup:
    """Cayley table of a list of permutations under composition (p*q)(k) = p[q[k]]."""
    perms = [tuple(p) for p in perms]
    index = {p: i for i, p in enumerate(perms)}
    n = len(perms)
    table = np.empty((n, n), dtype=np.int64)
    for i, p in enumerate(perms):
        for j, q in enumerate(perms):
            comp = tuple(p[k] for k in q)
            if comp not in index:
                raise InvalidGroup("permutation set is not closed under composition")
            table[i, j] = index[comp]
    return validate_group(table, labels)


def cyclic_group(n: int) -> FiniteGroup:
    ar = np.arange(n)
    return validate_group((ar[:, None] + ar[None, :]) % n)


def symmetric_group(k: int) -> FiniteGroup:
    perms = list(itertools.permutations(range(k)))
    return group_from_permutations(perms, ["".join(map(str, p)) for p in perms])


def dihedral_group(k: int) -> FiniteGroup:
    """Symmetries of a regular k-gon, order 2k."""
    rot = [tuple((i + r) % k for i in range(k)) for r in range(k)]
    ref = [tuple((r - i) % k for i in range(k)) for r in range(k)]
    labels = [f"r{r}" for r in range(k)] + [f"s{r}" for r in range(k)]
    return group_from_permutations(rot + ref, labels)


def load_group(data) -> FiniteGroup:
    """Build a group from a JSON object {order, mult, labels} or a path to one."""
    if isinstance(data, (str, bytes)) or hasattr(data, "__fspath__"):
        with open(data, encoding="utf-8") as fh:
            data = json.load(fh)
    if not isinstance(data, dict) or "mult" not in data:
        raise InvalidGroup("group definition needs a 'mult' table")
    g = validate_group(data["mult"], data.get("labels"))
    if "order" in data and int(data["order"]) != g.order:
        raise InvalidGroup(f"declared order {data['order']} != table size {g.order}")
    return g


# ---------------------------------------------------------------- vectors

@dataclass(frozen=True, eq=False)
class FnVec:
    group: FiniteGroup
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).reshape(-1)
        if len(v) != self.group.order:
            raise GroupMismatch(f"{len(v)} values for a group of order {self.group.order}")
        object.__setattr__(self, "values", v)

    @classmethod
    def indicator(cls, group, subset):
        v = np.zeros(group.order, dtype=complex)
        v[list(subset)] = 1.0
        return cls(group, v)


@dataclass(frozen=True, eq=False)
class MeasVec:
    group: FiniteGroup
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex).reshape(-1)
        if len(w) != self.group.order:
            raise GroupMismatch(f"{len(w)} weights for a group of order {self.group.order}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, group, x):
        w = np.zeros(group.order, dtype=complex)
        w[x] = 1.0
        return cls(group, w)

    def total(self, subset) -> complex:
        return complex(self.weights[list(subset)].sum())


# Raw maps on coefficient arrays.  Tensor inputs are flat arrays of length
# order**2.

def _fn_maps(g: FiniteGroup):
    n, e = g.order, g.identity
    return {
        "unit": lambda: np.ones(n, dtype=complex),
        "product": lambda t: np.asarray(t).reshape(n, n).diagonal().copy(),
        "involution": lambda a: np.conj(a),
        "counit": lambda a: a[e],
        "coproduct": lambda a: a[g.mult].reshape(-1),
        "coinvolution": lambda a: np.conj(a[g.inv]),
        "antipode": lambda a: a[g.inv],
    }


def _convolve(g, t):
    t = np.asarray(t, dtype=complex).reshape(-1)
    idx = g.mult.reshape(-1)
    n = g.order
    return np.bincount(idx, t.real, n) + 1j * np.bincount(idx, t.imag, n)


def _meas_maps(g: FiniteGroup):
    n, e = g.order, g.identity

    def unit():
        w = np.zeros(n, dtype=complex)
        w[e] = 1.0
        return w

    def coproduct(z):
        out = np.zeros((n, n), dtype=complex)
        out[np.arange(n), np.arange(n)] = z
        return out.reshape(-1)

    return {
        "unit": unit,
        "product": lambda t: _convolve(g, t),
        "involution": lambda z: np.conj(z[g.inv]),
        "counit": lambda z: z.sum(),
        "coproduct": coproduct,
        "coinvolution": lambda z: np.conj(z),
        "antipode": lambda z: z[g.inv],
    }


OPS = ("unit", "product", "involution", "counit", "coproduct", "coinvolution", "antipode")


def _check_same(operands):
    g = operands[0].group
    for o in operands[1:]:
        if not g.same_as(o.group):
            raise GroupMismatch("operands live on different groups")
    return g


def _hopf(cls, attr, maps_for, op, operands, group):
    if op not in OPS:
        raise ValueError(f"unknown operation {op!r}")
    if op == "unit":
        if group is None:
            raise ValueError("unit needs a group")
        return cls(group, maps_for(group)["unit"]())
    if not operands:
        raise ValueError(f"{op} needs an operand")
    g = _check_same(operands)
    if op == "product":
        if len(operands) == 2:
            a, b = (getattr(o, attr) for o in operands)
            return cls(g, maps_for(g)["product"](np.outer(a, b).reshape(-1)))
        if len(operands) == 1 and len(g.factors) == 2 and g.factors[0].same_as(g.factors[1]):
            base = g.factors[0]
            return cls(base, maps_for(base)["product"](getattr(operands[0], attr)))
        raise GroupMismatch("product takes two operands or one on a product group")
    if len(operands) != 1:
        raise ValueError(f"{op} takes one operand")
    out = maps_for(g)[op](getattr(operands[0], attr))
    if op == "counit":
        return complex(out)
    if op == "coproduct":
        return cls(g.square, out)
    return cls(g, out)


def fn_hopf(op: str, *operands: FnVec, group: FiniteGroup | None = None):
    """Structure maps of the function algebra (``op`` is one of ``OPS``)."""
    return _hopf(FnVec, "values", _fn_maps, op, operands, group)


def meas_hopf(op: str, *operands: MeasVec, group: FiniteGroup | None = None):
    """Structure maps of the measure algebra (``op`` is one of ``OPS``)."""
    return _hopf(MeasVec, "weights", _meas_maps, op, operands, group)


def pair(z: MeasVec, a: FnVec) -> complex:
    """Integral of a function against a measure: sum_x z[x] a[x]."""
    if not z.group.same_as(a.group):
        raise GroupMismatch("measure and function live on different groups")
    return complex(np.dot(z.weights, a.values))


# ---------------------------------------------------------------- axioms

@dataclass(frozen=True)
class _Op:
    """A real sparse matrix, conjugate-linear when ``anti`` is set."""

    M: sp.csr_matrix
    anti: bool = False

    def __matmul__(self, other: "_Op") -> "_Op":
        return _Op((self.M @ other.M).tocsr(), self.anti ^ other.anti)

    def __xor__(self, other: "_Op") -> "_Op":
        # tensor product; mixed linear/conjugate-linear tensors are undefined
        assert self.anti == other.anti
        return _Op(sp.kron(self.M, other.M, format="csr"), self.anti)


def _ident(n, anti=False):
    return _Op(sp.identity(n, format="csr"), anti)


def _swap(n):
    idx = np.arange(n * n)
    perm = (idx % n) * n + idx // n
    return _Op(sp.csr_matrix((np.ones(n * n), (idx, perm)), shape=(n * n, n * n)))


def _deviation(a: _Op, b: _Op) -> float:
    """Max deviation of the two maps on basis tuples and i times basis tuples."""
    if a.M.shape != b.M.shape:
        return float("inf")
    d = abs(a.M - b.M)
    dev = d.max() if d.nnz else 0.0
    sa = -1.0 if a.anti else 1.0
    sb = -1.0 if b.anti else 1.0
    d2 = abs(sa * a.M - sb * b.M)
    return float(max(dev, d2.max() if d2.nnz else 0.0))


def _matrix_of(fn, n_in, complex_out=True):
    cols = []
    for k in range(n_in):
        e = np.zeros(n_in, dtype=complex)
        e[k] = 1.0
        cols.append(np.atleast_1d(fn(e)))
    M = np.column_stack(cols)
    assert np.allclose(M.imag, 0.0)
    return sp.csr_matrix(M.real)


def _structure(g: FiniteGroup, side: str) -> dict:
    """Sparse matrices of the public maps, read off from basis images."""
    n = g.order
    maps = _fn_maps(g) if side == FUNCTIONS else _meas_maps(g)
    anti = {"involution": True, "coinvolution": True}
    ops = {"unit": _Op(sp.csr_matrix(maps["unit"]().real.reshape(n, 1)))}
    for name, n_in in (("product", n * n), ("involution", n), ("counit", n),
                       ("coproduct", n), ("coinvolution", n), ("antipode", n)):
        ops[name] = _Op(_matrix_of(maps[name], n_in), anti.get(name, False))
    # confirm the declared (conjugate-)linearity on i * basis
    lin_dev = 0.0
    for name, n_in in (("involution", n), ("coinvolution", n), ("antipode", n),
                       ("coproduct", n), ("counit", n), ("product", n * n)):
        M = ops[name].M.toarray()
        s = -1j if ops[name].anti else 1j
        for k in range(n_in):
            e = np.zeros(n_in, dtype=complex)
            e[k] = 1j
            lin_dev = max(lin_dev, float(np.max(np.abs(np.atleast_1d(maps[name](e)) - s * M[:, k]))))
    ops["_linearity"] = lin_dev
    return ops


@dataclass
class AxiomReport:
    side: str
    order: int
    deviations: dict = field(default_factory=dict)
    commutative: bool = True
    cocommutative: bool = True

    @property
    def passed(self) -> bool:
        return all(d <= AXIOM_TOL for d in self.deviations.values())

    @property
    def failures(self) -> list:
        return [k for k, d in self.deviations.items() if d > AXIOM_TOL]

    def to_json(self) -> dict:
        return {
            "side": self.side,
            "order": self.order,
            "passed": self.passed,
            "commutative": self.commutative,
            "cocommutative": self.cocommutative,
            "deviations": self.deviations,
        }


def verify_hopf_axioms(group: FiniteGroup, side: str) -> AxiomReport:
    """Brute-force check of every *-Hopf identity on all basis tuples."""
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    if group.order > MAX_AXIOM_ORDER:
        raise SizeLimit(f"group order {group.order} > {MAX_AXIOM_ORDER}")
    n = group.order
    S = _structure(group, side)
    eta, nab, star = S["unit"], S["product"], S["involution"]
    eps, delta, pi, s = S["counit"], S["coproduct"], S["coinvolution"], S["antipode"]
    I = _ident(n)
    tau = _swap(n)
    one = _ident(1)
    conj = _ident(1, True)

    dev = {}
    dev["linearity"] = S["_linearity"]
    # *-algebra
    dev["unital_left"] = _deviation(nab @ (eta ^ I), I)
    dev["unital_right"] = _deviation(nab @ (I ^ eta), I)
    dev["associative"] = _deviation(nab @ (nab ^ I), nab @ (I ^ nab))
    dev["involutive_product"] = _deviation(star @ nab @ tau, nab @ (star ^ star))
    dev["involutive_square"] = _deviation(star @ star, I)
    # *-coalgebra
    dev["counital_left"] = _deviation((eps ^ I) @ delta, I)
    dev["counital_right"] = _deviation((I ^ eps) @ delta, I)
    dev["coassociative"] = _deviation((delta ^ I) @ delta, (I ^ delta) @ delta)
    dev["coinvolutive_coproduct"] = _deviation(tau @ delta @ pi, (pi ^ pi) @ delta)
    dev["coinvolutive_square"] = _deviation(pi @ pi, I)
    # *-bialgebra: unit/counit family
    dev["counit_unit"] = _deviation(eps @ eta, one)
    dev["coproduct_unit"] = _deviation(delta @ eta, eta ^ eta)
    dev["counit_product"] = _deviation(eps @ nab, eps ^ eps)
    # product/coproduct family
    mid = _ident(n) ^ tau ^ _ident(n)
    dev["coproduct_product"] = _deviation(delta @ nab, (nab ^ nab) @ mid @ (delta ^ delta))
    # involution/coinvolution families
    dev["coinvolution_unit"] = _deviation(pi @ eta, eta @ conj)
    dev["counit_involution"] = _deviation(eps @ star, conj @ eps)
    dev["coinvolution_product"] = _deviation(pi @ nab, nab @ (pi ^ pi))
    dev["coproduct_involution"] = _deviation(delta @ star, (star ^ star) @ delta)
    dev["coinvolution_involution"] = _deviation(pi @ star, star @ pi)
    # *-Hopf: antipode relation and its factorization
    rhs = eta @ conj @ eps
    dev["antipode_left"] = _deviation(nab @ (pi ^ star) @ delta, rhs)
    dev["antipode_right"] = _deviation(nab @ (star ^ pi) @ delta, rhs)
    dev["antipode_factor_left"] = _deviation(s, pi @ star)
    dev["antipode_factor_right"] = _deviation(s, star @ pi)
    dev["antipode_linear_left"] = _deviation(nab @ (s ^ I) @ delta, eta @ eps)
    dev["antipode_linear_right"] = _deviation(nab @ (I ^ s) @ delta, eta @ eps)

    return AxiomReport(
        side=side,
        order=n,
        deviations={k: float(v) for k, v in dev.items()},
        commutative=_deviation(nab, nab @ tau) == 0.0,
        cocommutative=_deviation(delta, tau @ delta) == 0.0,
    )


def verify_duality(group: FiniteGroup) -> dict:
    """Deviations of the pairing identities between the two algebras.

    Every identity is evaluated on all basis tuples and their i-multiples by
    direct calls to the public maps.
    """
    n = group.order
    fm, mm = _fn_maps(group), _meas_maps(group)
    scalars = (1.0, 1j)

    def basis(k, m, c):
        v = np.zeros(m, dtype=complex)
        v[k] = c
        return v

    dev = dict.fromkeys(
        ["product_coproduct", "coproduct_product", "involution_coinvolution",
         "coinvolution_involution", "antipode", "unit_counit", "counit_unit"], 0.0)

    def upd(key, x, y):
        dev[key] = max(dev[key], abs(x - y))

    for c1, c2 in itertools.product(scalars, scalars):
        for u in range(n):
            z = basis(u, n, c1)
            # <z | product(b)> = <coproduct(z) | b> over b in the tensor basis
            lhs = np.array([np.dot(z, fm["product"](basis(k, n * n, c2))) for k in range(n * n)])
            rhs = mm["coproduct"](z) * c2
            dev["product_coproduct"] = max(dev["product_coproduct"], float(np.max(np.abs(lhs - rhs))))
            for w in range(n):
                a = basis(w, n, c2)
                upd("involution_coinvolution", np.dot(z, fm["involution"](a)),
                    np.conj(np.dot(mm["coinvolution"](z), a)))
                upd("coinvolution_involution", np.dot(mm["involution"](z), a),
                    np.conj(np.dot(z, fm["coinvolution"](a))))
                upd("antipode", np.dot(z, fm["antipode"](a)), np.dot(mm["antipode"](z), a))
            upd("unit_counit", np.dot(z, fm["unit"]()), mm["counit"](z))
        for w in range(n):
            a = basis(w, n, c1)
            # <product(y) | a> = <y | coproduct(a)> over y in the tensor basis
            lhs = np.array([np.dot(mm["product"](basis(k, n * n, c2)), a) for k in range(n * n)])
            rhs = fm["coproduct"](a) * c2
            dev["coproduct_product"] = max(dev["coproduct_product"], float(np.max(np.abs(lhs - rhs))))
            upd("counit_unit", np.dot(mm["unit"](), a), fm["counit"](a))
    return {k: float(v) for k, v in dev.items()}


# ---------------------------------------------------------------- GNS

def _algebra(group: FiniteGroup, side: str):
    """(product, star, unit coefficients, state evaluation) for one side."""
    if side == FUNCTIONS:
        maps = _fn_maps(group)
        prod = lambda a, b: a * b
        evaluate = lambda state, a: np.dot(state, a)
    elif side == MEASURES:
        maps = _meas_maps(group)
        prod = lambda a, b: _convolve(group, np.outer(a, b))
        evaluate = lambda state, a: np.dot(a, state)
    else:
        raise ValueError(f"side must be one of {SIDES}")
    return prod, maps["involution"], maps["unit"](), evaluate


def _state_array(group, side, state):
    if isinstance(state, (FnVec, MeasVec)):
        if not group.same_as(state.group):
            raise GroupMismatch("state lives on a different group")
        if side == FUNCTIONS and not isinstance(state, MeasVec):
            raise GroupMismatch("a state on functions is a measure")
        if side == MEASURES and not isinstance(state, FnVec):
            raise GroupMismatch("a state on measures is a function")
        return state.weights if isinstance(state, MeasVec) else state.values
    arr = np.asarray(state, dtype=complex).reshape(-1)
    if len(arr) != group.order:
        raise GroupMismatch(f"state has {len(arr)} entries, group order {group.order}")
    return arr


def valuation(group, side, state, a) -> complex:
    _, _, _, evaluate = _algebra(group, side)
    return complex(evaluate(_state_array(group, side, state), np.asarray(a, dtype=complex)))


@dataclass(frozen=True)
class GnsResult:
    gram: np.ndarray
    nullRank: int
    quotientBasis: list
    repMatrices: list
    cyclicVector: np.ndarray
    quotientMap: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.cyclicVector)

    def represent(self, coeffs) -> np.ndarray:
        """pi(a) for an algebra element given by basis coefficients."""
        c = np.asarray(coeffs, dtype=complex)
        return np.tensordot(c, np.array(self.repMatrices), axes=1)


def gram_matrix(group: FiniteGroup, side: str, state) -> np.ndarray:
    prod, star, _, evaluate = _algebra(group, side)
    z = _state_array(group, side, state)
    n = group.order
    eye = np.eye(n, dtype=complex)
    G = np.empty((n, n), dtype=complex)
    for b in range(n):
        sb = star(eye[b])
        for c in range(n):
            G[b, c] = evaluate(z, prod(sb, eye[c]))
    return G


def gns_construct(group: FiniteGroup, state, side: str = FUNCTIONS) -> GnsResult:
    """Hilbert space, representation and cyclic vector of a copositive state.

    ``side`` names the algebra the state acts on: a measure is a state on
    functions, a function is a state on measures.
    """
    prod, _, unit, _ = _algebra(group, side)
    n = group.order
    G = gram_matrix(group, side, state)
    herm = float(np.max(np.abs(G - G.conj().T)))
    scale = max(float(np.max(np.abs(G))), 1.0)
    if herm > PSD_TOL * scale:
        raise NotCopositive(f"state is not coreal: Gram matrix asymmetry {herm:.3e}")
    G = 0.5 * (G + G.conj().T)
    lam, U = np.linalg.eigh(G)
    if lam[0] < -PSD_TOL:
        raise NotCopositive(f"Gram matrix has eigenvalue {lam[0]:.3e} < 0")
    top = float(np.max(np.abs(lam))) if len(lam) else 0.0
    keep = lam > RANK_RTOL * top if top > 0 else np.zeros(n, dtype=bool)
    Up, lp = U[:, keep], lam[keep]
    sq = np.sqrt(lp)
    Q = sq[:, None] * Up.conj().T  # quotient map on coefficients
    back = Up / sq[None, :]  # lifts quotient coordinates to representatives
    eye = np.eye(n, dtype=complex)
    reps = []
    for a in range(n):
        La = np.column_stack([prod(eye[a], eye[c]) for c in range(n)])
        reps.append(Q @ La @ back)
    return GnsResult(
        gram=G,
        nullRank=int(n - keep.sum()),
        quotientBasis=[Up[:, k].copy() for k in range(Up.shape[1])],
        repMatrices=reps,
        cyclicVector=Q @ unit,
        quotientMap=Q,
    )


@dataclass(frozen=True)
class CauchySchwarz:
    ok: bool
    slack: float


def cauchy_schwarz_check(group: FiniteGroup, state, a, b, side: str = FUNCTIONS) -> CauchySchwarz:
    """Slack <a*a><b*b> - |<a*b>|^2 of the Cauchy-Schwarz inequality."""
    prod, star, _, evaluate = _algebra(group, side)
    z = _state_array(group, side, state)
    a = np.asarray(getattr(a, "values", getattr(a, "weights", a)), dtype=complex)
    b = np.asarray(getattr(b, "values", getattr(b, "weights", b)), dtype=complex)
    aa = evaluate(z, prod(star(a), a)).real
    bb = evaluate(z, prod(star(b), b)).real
    ab = evaluate(z, prod(star(a), b))
    slack = float(aa * bb - abs(ab) ** 2)
    return CauchySchwarz(slack >= -AXIOM_TOL, slack)


def regular_representation(group: FiniteGroup) -> list:
    """Permutation matrices R(x) e_y = e_{xy}."""
    n = group.order
    mats = []
    for x in range(n):
        R = np.zeros((n, n))
        R[group.mult[x], np.arange(n)] = 1.0
        mats.append(R)
    return mats


def random_copositive_state(group: FiniteGroup, side: str, rng, rank: int | None = None):
    """Random coreal copositive state for ``side``, possibly degenerate.

    On functions: a nonnegative measure with some zero weights.  On
    measures: a positive-definite function sum_k <u_k|R(x)|u_k> built from
    ``rank`` random vectors in the regular representation.
    """
    n = group.order
    if side == FUNCTIONS:
        w = rng.random(n)
        w[rng.random(n) < 0.3] = 0.0
        return MeasVec(group, w)
    rank = rng.integers(1, n + 1) if rank is None else rank
    R = regular_representation(group)
    f = np.zeros(n, dtype=complex)
    for _ in range(rank):
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        f += np.array([np.vdot(u, R[x] @ u) for x in range(n)])
    return FnVec(group, f / n)
