"""Command-line front end.

    hopfprice axioms --input group.json --side measures
    hopfprice qg-smile --input econ.json --instrument caplet --grid 0.01:0.05:21
    hopfprice dirac-smile --input econ.json --grid 0.5:1.5:50
    hopfprice bound 1.1 1 0.2
    hopfprice qg-price --input econ.json --instrument fx --strike 1.0

Exit codes: 0 success, 1 model failure (domain violation, capacity,
failed axiom), 2 malformed input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import algebra, dirac, pricing
from .errors import HopfPriceError, InputError, ModelError, OutOfRange
from .quadrature import McConfig

EXIT_OK, EXIT_MODEL, EXIT_INPUT = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str | None = None
    output: str | None = None
    grid: tuple | None = None
    nodes: int = pricing.DEFAULT_NODES
    paths: int | None = None
    seed: int = 0x5EED
    workers: int = 1


def parse_grid(text: str) -> tuple:
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be min:max:count, got {text!r}") from None
    if n < 2 or not lo < hi:
        raise argparse.ArgumentTypeError("grid needs count >= 2 and min < max")
    return lo, hi, n


def _fmt(x) -> str:
    x = float(x)
    return "nan" if math.isnan(x) else f"{x:.12g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(path):
    if path is None:
        raise OutOfRange("--input is required")
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise OutOfRange(f"cannot read {path}: {exc}") from None


def _strikes(cfg, default):
    lo, hi, n = cfg.grid if cfg.grid else default
    return np.linspace(lo, hi, n)


def _mc(cfg):
    return McConfig(cfg.seed, cfg.paths, cfg.workers) if cfg.paths else None


# ---------------------------------------------------------------- axioms

def cmd_axioms(cfg: RunConfig, side: str) -> int:
    group = algebra.load_group(_load_json(cfg.input))
    report = algebra.verify_hopf_axioms(group, side)
    out = report.to_json()
    out["duality"] = algebra.verify_duality(group)
    passed = report.passed and all(v <= algebra.AXIOM_TOL for v in out["duality"].values())
    out["passed"] = passed
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", cfg.output)
    return EXIT_OK if passed else EXIT_MODEL


# ---------------------------------------------------------------- Gauss smiles

def _qg_quote(econ, spec, instrument, kappa, cfg):
    mc = _mc(cfg)
    if instrument == "caplet":
        c = spec["caplet"]
        return pricing.qg_caplet_price(econ, c["currency"], int(c.get("i", 0)), int(c["j"]), int(c["k"]),
                                       float(kappa), nodes=cfg.nodes, mc=mc)
    if instrument == "fx":
        c = spec["fx"]
        return pricing.qg_fx_option_price(econ, c["foreign"], c["domestic"], int(c["i"]), float(kappa),
                                          nodes=cfg.nodes, mc=mc)
    raise OutOfRange(f"unknown instrument {instrument!r}")


def _load_gauss(cfg):
    spec = _load_json(cfg.input)
    try:
        econ = pricing.GaussEconomy.from_json(spec)
    except (KeyError, TypeError) as exc:
        raise OutOfRange(f"malformed economy file: {exc!r}") from None
    return spec, econ


QG_HEADER = ["strike", "forward", "price", "vol_normal", "vol_lognormal"]


def cmd_qg_smile(cfg: RunConfig, instrument: str) -> int:
    spec, econ = _load_gauss(cfg)
    rows = []
    for k in _strikes(cfg, (0.5, 1.5, 21)):
        q = _qg_quote(econ, spec, instrument, k, cfg)
        rows.append([k, q.forward, q.price, q.vol_normal, q.vol_lognormal])
    _emit(_csv(QG_HEADER, rows), cfg.output)
    return EXIT_OK


def cmd_qg_price(cfg: RunConfig, instrument: str, strikes) -> int:
    spec, econ = _load_gauss(cfg)
    rows = []
    for k in strikes:
        q = _qg_quote(econ, spec, instrument, k, cfg)
        rows.append([k, q.forward, q.price, q.vol_normal, q.vol_lognormal])
    _emit(_csv(QG_HEADER, rows), cfg.output)
    return EXIT_OK


# ---------------------------------------------------------------- Dirac smiles

def _complex_vec(obj):
    arr = np.asarray(obj, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr[:, 0] + 1j * arr[:, 1]
    return arr.astype(complex)


def load_dirac_economy(spec) -> pricing.DiracEconomy:
    """Dirac economy from its JSON description.

    ``group`` is "su2" or a finite group object; intervals carry a ``rep``
    ("fundamental", "trivial", {"tensor_power": k}, or {"matrices": [...]}
    for finite groups, matrices given as nested [re, im] pairs) and a unit
    vector ``u``.  Deflator elements are SU(2) matrices or {"theta", "axis"}
    rotations, or finite-group element indices.
    """
    gspec = spec.get("group", "su2")
    group = None if gspec == "su2" else algebra.load_group(gspec)

    def element(obj):
        return dirac.su2_from_json(obj) if group is None else dirac.GroupElt(group, int(obj))

    def rep(obj):
        if obj == "trivial":
            return dirac.trivial_rep("su2" if group is None else "finite", group)
        if group is None:
            if obj == "fundamental":
                return dirac.su2_fundamental()
            if isinstance(obj, dict) and "tensor_power" in obj:
                r = dirac.su2_fundamental()
                for _ in range(int(obj["tensor_power"]) - 1):
                    r = dirac.rep_tensor(r, dirac.su2_fundamental())
                return r
        else:
            if obj == "regular":
                return dirac.finite_regular_rep(group)
            if isinstance(obj, dict) and "matrices" in obj:
                mats = [np.asarray(m, dtype=float) for m in obj["matrices"]]
                mats = [m[..., 0] + 1j * m[..., 1] if m.ndim == 3 else m for m in mats]
                return dirac.finite_rep(group, mats)
        raise OutOfRange(f"unsupported representation {obj!r}")

    try:
        tl = pricing.Timeline(spec["timeline"])
        intervals = tuple(dirac.RepState.driving(rep(w["rep"]), _complex_vec(w["u"])) for w in spec["intervals"])
        ccys = spec["currencies"]
        defl = {c: [element(x) for x in v["deflators"]] for c, v in ccys.items()}
        p = {c: v["p"] for c, v in ccys.items()}
        s = {c: v.get("s", 1.0) for c, v in ccys.items()}
    except (KeyError, TypeError) as exc:
        raise OutOfRange(f"malformed economy file: {exc!r}") from None
    return pricing.DiracEconomy(tl, intervals, defl, p, s)


DIRAC_HEADER = ["strike", "forward", "sigma", "quantum_price", "classical_max", "bound",
                "vol_lognormal_quantum", "vol_lognormal_classical", "density"]


def implied_density(strikes, undiscounted) -> np.ndarray:
    """Second strike derivative by central differences, copied to the grid ends."""
    k = np.asarray(strikes, dtype=float)
    c = np.asarray(undiscounted, dtype=float)
    dens = np.full(len(k), np.nan)
    if len(k) >= 3:
        h1, h2 = np.diff(k)[:-1], np.diff(k)[1:]
        dens[1:-1] = 2.0 * (h1 * c[2:] - (h1 + h2) * c[1:-1] + h2 * c[:-2]) / (h1 * h2 * (h1 + h2))
        dens[0], dens[-1] = dens[1], dens[-2]
    return dens


def dirac_smile_rows(econ: pricing.DiracEconomy, opt: dict, strikes, restricted: bool = False) -> list:
    kind = opt.get("type", "fx")
    rows, und = [], []
    for kappa in strikes:
        if kind == "fx":
            q = pricing.dirac_fx_option_price(econ, opt["foreign"], opt["domestic"], int(opt["i"]), float(kappa),
                                              restricted)
            F, K, scale = q.forward, kappa, q.annuity
        elif kind == "ir":
            i, j = int(opt.get("i", 0)), int(opt["j"])
            q = pricing.dirac_ir_option_price(econ, opt["currency"], i, j, float(kappa), restricted)
            delta = econ.timeline.accrual(i, j)
            F, K, scale = 1.0 + q.forward * delta, 1.0 + kappa * delta, q.annuity / delta
        else:
            raise OutOfRange(f"unknown option type {kind!r}")
        classical = scale * pricing.classical_binomial_max(F, K, q.sigma)
        bound = scale * dirac.option_bound(F, K, q.sigma)
        vol_c = pricing.safe_implied_vol(classical / q.annuity, q.forward, q.strike, q.expiry, "lognormal")
        rows.append([kappa, q.forward, q.sigma, q.price, classical, bound, q.vol_lognormal, vol_c])
        und.append(q.undiscounted)
    dens = implied_density(strikes, und)
    return [r + [d] for r, d in zip(rows, dens)]


def cmd_dirac_smile(cfg: RunConfig) -> int:
    spec = _load_json(cfg.input)
    econ = load_dirac_economy(spec)
    opt = spec.get("option", {"type": "fx"})
    rows = dirac_smile_rows(econ, opt, _strikes(cfg, (0.5, 1.5, 50)), bool(opt.get("restricted", False)))
    _emit(_csv(DIRAC_HEADER, rows), cfg.output)
    return EXIT_OK


def format_bound(value: float) -> str:
    return "0" if value == 0 else f"{value:#.10g}"


def cmd_bound(F: float, K: float, sigma: float, output=None) -> int:
    _emit(format_bound(dirac.option_bound(F, K, sigma)) + "\n", output)
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input")
    common.add_argument("--output")
    common.add_argument("--grid", type=parse_grid)
    common.add_argument("--nodes", type=int, default=pricing.DEFAULT_NODES)
    common.add_argument("--paths", type=int)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=0x5EED)
    common.add_argument("--workers", type=int, default=1)

    ap = argparse.ArgumentParser(prog="hopfprice", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("axioms", parents=[common], help="check the *-Hopf axioms of a finite group")
    p.add_argument("--side", choices=algebra.SIDES, default=algebra.MEASURES)
    p = sub.add_parser("qg-smile", parents=[common], help="Quadratic Gauss smile table")
    p.add_argument("--instrument", choices=("caplet", "fx"), default="caplet")
    sub.add_parser("dirac-smile", parents=[common], help="Linear Dirac smile table")
    p = sub.add_parser("bound", parents=[common], help="closed-form option bound")
    p.add_argument("F", type=float)
    p.add_argument("K", type=float)
    p.add_argument("sigma", type=float)
    p = sub.add_parser("qg-price", parents=[common], help="Quadratic Gauss option prices")
    p.add_argument("--instrument", choices=("caplet", "fx"), default="caplet")
    p.add_argument("--strike", type=float, action="append", required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.command, args.input, args.output, args.grid, args.nodes, args.paths, args.seed,
                    args.workers)
    try:
        if args.command == "axioms":
            return cmd_axioms(cfg, args.side)
        if args.command == "qg-smile":
            return cmd_qg_smile(cfg, args.instrument)
        if args.command == "dirac-smile":
            return cmd_dirac_smile(cfg)
        if args.command == "bound":
            return cmd_bound(args.F, args.K, args.sigma, cfg.output)
        if args.command == "qg-price":
            return cmd_qg_price(cfg, args.instrument, args.strike)
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ModelError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except HopfPriceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
