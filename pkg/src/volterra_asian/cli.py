"""Command-line interface.

    volterra-asian price --type fixed-call --T 0.2 --K 90 --alpha 1.0
    volterra-asian table --which floating --alphas 1.0,0.75
    volterra-asian check --suite parity

Exit codes: 0 success, 1 check failure, 2 usage error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .classical import classical_psi0_batch
from .errors import DomainError, NumericFailure
from .kernel import Kernel, ModelParams
from .mc import SimSpec, mc_prices
from .numerics import QuadratureSpec
from .pricing import (OptionType, PriceResult, PricingRequest, parity_grid, price,
                      price_fixed_grid, price_float_pair)
from .riccati import DEFAULT_STEPS
from .transform import psi0_batch

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

MATURITIES = (0.2, 0.4, 0.5, 1.0, 1.5, 2.0, 3.0, 8.0, 12.0)
STRIKES = (90.0, 95.0, 100.0, 105.0, 110.0)
ALPHAS = (1.0, 0.75, 0.6)

PARITY_TOL = 1e-8
CONSISTENCY_TOL = 1e-6
CONSISTENCY_STEPS = 4096
# largest mean Euler bias seen at 512 steps over the MC cells, rounded up
MC_ALLOWANCE = 0.05
MC_CELLS = (
    ("fixed-call", 90.0, 0.2, 1.0),
    ("float-put", None, 0.5, 1.0),
    ("fixed-call", 100.0, 1.0, 0.75),
    ("float-call", None, 0.4, 0.75),
    ("fixed-put", 105.0, 2.0, 0.6),
    ("float-put", None, 3.0, 0.6),
)

_PARAM_KEYS = tuple(f.name for f in fields(ModelParams))
_QUAD_KEYS = {"quad_lower": "lower", "quad_upper": "upper", "quad_rule": "rule",
              "quad_panels": "panels", "quad_tol": "tol"}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliConfig:
    params: ModelParams = field(default_factory=ModelParams)
    alpha: float = 1.0
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    n_steps: int = DEFAULT_STEPS
    format: str = "table"

    @property
    def kernel(self) -> Kernel:
        return Kernel.from_alpha(self.alpha)

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "alpha": self.alpha,
                "quad": asdict(self.quad), "n_steps": self.n_steps, "format": self.format}

    @classmethod
    def from_dict(cls, d: dict) -> "CliConfig":
        return cls(ModelParams(**d["params"]), float(d["alpha"]), QuadratureSpec(**d["quad"]),
                   int(d["n_steps"]), d["format"])


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _PARAM_KEYS and key not in _QUAD_KEYS and key not in ("alpha", "n_steps", "format"):
            raise UsageError(f"{path}:{num}: unknown key {key!r}")
        out[key] = value
    return out


def _num(key, value, kind=float):
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise UsageError(f"{key}: cannot parse {value!r} as {kind.__name__}") from None


def build_config(ns: argparse.Namespace, default_steps: int = DEFAULT_STEPS) -> CliConfig:
    merged = read_config_file(ns.config) if ns.config else {}
    for key in (*_PARAM_KEYS, *_QUAD_KEYS, "alpha", "n_steps", "format"):
        v = getattr(ns, key, None)
        if v is not None:
            merged[key] = v
    params = ModelParams(**{k: _num(k, merged[k]) for k in _PARAM_KEYS if k in merged})
    quad_kw = {}
    for key, name in _QUAD_KEYS.items():
        if key in merged:
            kind = {"rule": str, "panels": int}.get(name, float)
            quad_kw[name] = _num(key, merged[key], kind)
    fmt = merged.get("format", "table")
    if fmt not in ("table", "csv", "json"):
        raise UsageError(f"unknown format {fmt!r}")
    alpha = _num("alpha", merged.get("alpha", 1.0))
    Kernel.from_alpha(alpha)  # validates
    return CliConfig(params, alpha, QuadratureSpec(**quad_kw),
                     _num("n_steps", merged.get("n_steps", default_steps), int), fmt)


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, with_alpha=True):
    g = p.add_argument_group("model")
    for key in _PARAM_KEYS:
        g.add_argument(f"--{key}", dest=key, default=None, help=f"override {key}")
    if with_alpha:
        g.add_argument("--alpha", default=None, help="kernel roughness; 1.0 is the classical kernel")
    n = p.add_argument_group("numerics")
    n.add_argument("--n-steps", dest="n_steps", default=None, help="Riccati grid size")
    n.add_argument("--quad-lower", dest="quad_lower", default=None)
    n.add_argument("--quad-upper", dest="quad_upper", default=None)
    n.add_argument("--quad-rule", dest="quad_rule", default=None, choices=("adaptive", "fixed-panel"))
    n.add_argument("--quad-panels", dest="quad_panels", default=None)
    n.add_argument("--quad-tol", dest="quad_tol", default=None)
    p.add_argument("--config", default=None, help="flat key=value file overriding defaults")
    p.add_argument("--format", default=None, choices=("table", "csv", "json"))


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="volterra-asian",
                                 description="Asian and European option prices under Volterra-Heston models.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price one option")
    p.add_argument("--type", dest="option", required=True, choices=[o.value for o in OptionType])
    p.add_argument("--T", dest="T", type=float, required=True, help="maturity in years")
    p.add_argument("--K", dest="K", type=float, default=None, help="strike (not for floating types)")
    _common(p)

    t = sub.add_parser("table", help="fixed- or floating-strike benchmark grid")
    t.add_argument("--which", required=True, choices=("fixed", "floating"))
    t.add_argument("--alphas", type=_float_list, default=ALPHAS)
    t.add_argument("--maturities", type=_float_list, default=MATURITIES)
    t.add_argument("--strikes", type=_float_list, default=STRIKES)
    t.add_argument("--workers", type=int, default=1,
                   help="processes for independent (alpha, T) cells; output is identical")
    _common(t, with_alpha=False)

    c = sub.add_parser("check", help="parity, classical consistency or Monte Carlo checks")
    c.add_argument("--suite", required=True, choices=("parity", "consistency", "mc"))
    c.add_argument("--alphas", type=_float_list, default=None)
    c.add_argument("--paths", type=int, default=100_000)
    c.add_argument("--mc-steps", dest="mc_steps", type=int, default=512)
    c.add_argument("--seed", type=int, default=20240601)
    _common(c)
    return ap


# ---- rendering -----------------------------------------------------------

def _csv(rows):
    buf = io.StringIO()
    buf.write("T,K,alpha,type,price\n")
    for r in rows:
        k = "" if r["K"] is None else f"{r['K']:g}"
        buf.write(f"{r['T']:g},{k},{r['alpha']:g},{r['type']},{r['price']:.4f}\n")
    return buf.getvalue()


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def render_price(cfg: CliConfig, option: str, T: float, K, res: PriceResult) -> str:
    row = {"T": T, "K": K, "alpha": cfg.alpha, "type": option, "price": res.price}
    if cfg.format == "csv":
        return _csv([row])
    if cfg.format == "json":
        return _json({"config": cfg.to_dict(), "request": {"type": option, "T": T, "K": K},
                      "result": res.to_dict(), "price": round(res.price, 4),
                      "price_full": res.price})
    d = res.diagnostics
    lines = [f"type             {option}", f"T                {T:g}"]
    if K is not None:
        lines.append(f"K                {K:g}")
    lines += [f"alpha            {cfg.alpha:g}", f"price            {res.price:.4f}",
              f"quad_nodes       {d.quad_nodes}", f"riccati_steps    {d.riccati_steps}",
              f"upper_truncation {d.upper_truncation:g}", f"quad_error       {d.quad_error:.2e}",
              f"psi(1,0)         {d.psi10.real:.10g}"]
    return "\n".join(lines) + "\n"


def _table_text(which, rows, alphas):
    by = {(r["T"], r["K"], r["alpha"], r["type"]): r["price"] for r in rows}
    keys = sorted({(r["T"], r["K"]) for r in rows}, key=lambda x: (x[0], x[1] or 0))
    calls = "fixed-call" if which == "fixed" else "float-call"
    puts = "fixed-put" if which == "fixed" else "float-put"
    head = ["T", "K"] if which == "fixed" else ["T"]
    cols = [f"C a={a:.2f}" for a in alphas] + [f"P a={a:.2f}" for a in alphas]
    out = ["  ".join(f"{h:>5}" for h in head) + "  " + "  ".join(f"{c:>10}" for c in cols)]
    for T, K in keys:
        lead = [f"{T:>5g}"] + ([f"{K:>5g}"] if which == "fixed" else [])
        vals = [by[(T, K, a, calls)] for a in alphas] + [by[(T, K, a, puts)] for a in alphas]
        out.append("  ".join(lead) + "  " + "  ".join(f"{v:>10.4f}" for v in vals))
    return "\n".join(out) + "\n"


# ---- commands ------------------------------------------------------------

def cmd_price(ns, out) -> int:
    cfg = build_config(ns)
    opt = OptionType(ns.option)
    if opt.is_floating and ns.K is not None:
        raise UsageError(f"{opt.value} has a floating strike; drop --K")
    if opt.needs_strike and (ns.K is None or not ns.K > 0):
        raise UsageError(f"{opt.value} needs a positive --K")
    req = PricingRequest(opt, ns.T, ns.K, quad=cfg.quad, n_steps=cfg.n_steps)
    res = price(req, cfg.kernel, cfg.params)
    out.write(render_price(cfg, opt.value, ns.T, ns.K, res))
    return EXIT_OK


def _cell(which, alpha, T, strikes, params, quad, n_steps):
    k = Kernel.from_alpha(alpha)
    if which == "fixed":
        c, p, _ = price_fixed_grid(strikes, T, k, params, quad, n_steps)
        return ([{"T": T, "K": K, "alpha": alpha, "type": "fixed-call", "price": float(v)}
                 for K, v in zip(strikes, c)]
                + [{"T": T, "K": K, "alpha": alpha, "type": "fixed-put", "price": float(v)}
                   for K, v in zip(strikes, p)])
    c, p, _ = price_float_pair(T, k, params, quad, n_steps)
    return [{"T": T, "K": None, "alpha": alpha, "type": "float-call", "price": float(c)},
            {"T": T, "K": None, "alpha": alpha, "type": "float-put", "price": float(p)}]


def table_rows(which, alphas, maturities, strikes, params, quad, n_steps, workers=1):
    jobs = [(which, a, T, strikes, params, quad, n_steps) for a in alphas for T in maturities]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_cell, *zip(*jobs)))
    else:
        parts = [_cell(*j) for j in jobs]
    return [r for part in parts for r in part]


def cmd_table(ns, out) -> int:
    cfg = build_config(ns)
    for a in ns.alphas:
        Kernel.from_alpha(a)
    if any(not K > 0 for K in ns.strikes) or any(not T > 0 for T in ns.maturities):
        raise UsageError("maturities and strikes must be positive")
    rows = table_rows(ns.which, ns.alphas, ns.maturities, ns.strikes, cfg.params, cfg.quad,
                      cfg.n_steps, ns.workers)
    if cfg.format == "csv":
        out.write(_csv(rows))
    elif cfg.format == "json":
        out.write(_json({"config": cfg.to_dict(), "which": ns.which,
                         "rows": [{**r, "price": round(r["price"], 4), "price_full": r["price"]}
                                  for r in rows]}))
    else:
        out.write(_table_text(ns.which, rows, ns.alphas))
    return EXIT_OK


def _check_alphas(ns, cfg):
    if ns.alphas is not None:
        for a in ns.alphas:
            Kernel.from_alpha(a)
        return ns.alphas
    return (cfg.alpha,) if ns.alpha is not None else ALPHAS


def _report(out, fmt, rows, cols, failed):
    if fmt == "json":
        out.write(_json({"rows": rows, "failed": failed}))
    elif fmt == "csv":
        out.write(",".join(cols) + ",ok\n")
        for r in rows:
            out.write(",".join(str(r[c]) for c in cols) + f",{int(r['ok'])}\n")
    else:
        for r in rows:
            mark = "ok  " if r["ok"] else "FAIL"
            out.write(mark + "  " + "  ".join(f"{c}={r[c]}" for c in cols) + "\n")
        out.write(f"{len(rows) - len(failed)}/{len(rows)} within threshold\n")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_check(ns, out) -> int:
    if ns.suite == "parity":
        cfg = build_config(ns)
        rows = []
        for a in _check_alphas(ns, cfg):
            k = Kernel.from_alpha(a)
            for T in MATURITIES:
                fixed, floating = parity_grid(T, STRIKES, k, cfg.params, cfg.quad, cfg.n_steps)
                for K, fx in zip(STRIKES, fixed):
                    rows.append({"alpha": a, "T": T, "K": K, "fixed": f"{fx:.2e}",
                                 "floating": f"{floating:.2e}",
                                 "ok": max(fx, floating) < PARITY_TOL})
        cols = ["alpha", "T", "K", "fixed", "floating"]
    elif ns.suite == "consistency":
        cfg = build_config(ns, default_steps=CONSISTENCY_STEPS)
        if ns.alpha is not None and cfg.alpha != 1.0:
            raise UsageError("the classical consistency check needs --alpha 1.0")
        grid = [0.0, 0.25, 0.5, 0.75, 1.0]
        s, w = np.array([(a, b) for a in grid for b in grid if a + b <= 1.0]).T
        rows = []
        for T in (0.2, 1.0, 3.0):
            vh = psi0_batch(s, w, T, Kernel.classical(), cfg.params, cfg.n_steps)
            ch = classical_psi0_batch(s, w, cfg.params, T)
            dev = float(np.max(np.abs(vh - ch)))
            rows.append({"T": T, "max_dev": f"{dev:.2e}", "ok": dev < CONSISTENCY_TOL})
        cols = ["T", "max_dev"]
    else:
        cfg = build_config(ns)
        spec = SimSpec(ns.paths, ns.mc_steps, ns.seed)
        rows = []
        cells = MC_CELLS if ns.alphas is None and ns.alpha is None else [
            c for c in MC_CELLS if c[3] in _check_alphas(ns, cfg)]
        for opt, K, T, a in cells:
            k = Kernel.from_alpha(a)
            ana = price(PricingRequest(opt, T, K, quad=cfg.quad, n_steps=cfg.n_steps), k, cfg.params).price
            est = mc_prices([(opt, K)], T, k, cfg.params, spec)[0]
            band = 3 * est.std_error + MC_ALLOWANCE
            rows.append({"type": opt, "alpha": a, "T": T, "K": K, "analytic": f"{ana:.4f}",
                         "mc": f"{est.estimate:.4f}", "se": f"{est.std_error:.4f}",
                         "band": f"{band:.4f}", "ok": abs(ana - est.estimate) <= band})
        cols = ["type", "alpha", "T", "K", "analytic", "mc", "se", "band"]
    failed = [r for r in rows if not r["ok"]]
    return _report(out, cfg.format, rows, cols, failed)


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = make_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handler = {"price": cmd_price, "table": cmd_table, "check": cmd_check}[ns.command]
    try:
        return handler(ns, out)
    except (UsageError, DomainError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
