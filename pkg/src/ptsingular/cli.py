"""Command-line front end.

Subcommands: spectrum, singular, perturb, borel, verify, sweep.

Options may also come from a flat ``key = value`` file given with
``--config``; keys mirror the long flag names (``cutoff = 40``,
``g-grid = 0:0.4:5``).  Flags override the file, which overrides the
built-in defaults.

Exit codes: 0 success, 1 a verification check failed, 2 invalid
configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .basis import BasisTruncation, MultiIndex
from .borel import QUADRATURE_RULES, borel_sum, default_q
from .linalg import (
    ConvergenceFailure,
    NoConvergence,
    SingularShift,
    canonical_order,
    eig_general,
    eig_hermitian,
)
from .operators import assemble_h, assemble_q, dump_matrix
from .perturbation import (
    DegenerateLevel,
    InsufficientOrders,
    TruncationTooSmall,
    coefficient_growth_fit,
    rs_coefficients,
)
from .potential import ParseError, PolynomialPotential, ValidationError, parse_potential
from .verify import CHECKS, WEYL_ORDERINGS, all_passed, branch_value

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

DEFAULTS = {
    "dim": 1,
    "cutoff": 30,
    "potential": "x1^3",
    "g": 0.0,
    "g-grid": None,
    "format": None,  # per-subcommand: csv, borel and verify use json
    "output": None,
    "dump-matrix": None,
    "workers": 1,
    "level": None,
    "order": 16,
    "order-q": None,
    "pade": None,
    "nodes": 64,
    "quadrature": "auto",
    "compare-direct": False,
    "checks": None,
    "k-max": 10,
    "weyl-order": "increasing",
    "window": 8,
    "trials": 20,
    "quantity": "singular",
    "count": 4,
}

BOOLEAN_KEYS = {"compare-direct"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    dim: int
    cutoff: int
    cutoff_explicit: bool
    potential: PolynomialPotential
    potential_text: str
    g_values: list
    format: str
    output: str | None
    dump_matrix: str | None
    workers: int
    options: dict = field(default_factory=dict)

    @property
    def truncation(self) -> BasisTruncation:
        return BasisTruncation(self.dim, self.cutoff)


def read_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("_", "-")
            if key not in DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def _parse_grid(text: str) -> list:
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError as exc:
        raise ConfigError(f"--g-grid must be start:stop:count, got {text!r}") from exc
    if count < 1:
        raise ConfigError("--g-grid count must be positive")
    return [float(x) for x in np.linspace(start, stop, count)]


def _as_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags, config file and defaults; validate everything at once."""
    file_values = read_config_file(args.config) if args.config else {}
    merged = {}
    explicit = set(file_values)
    for key, default in DEFAULTS.items():
        flag = getattr(args, key.replace("-", "_"), None)
        if key in BOOLEAN_KEYS:
            flag = flag or None
        if flag is not None:
            explicit.add(key)
        merged[key] = flag if flag is not None else file_values.get(key, default)

    errors = []

    def take(key, conv, check=None, message=""):
        try:
            v = conv(merged[key]) if merged[key] is not None else None
        except (TypeError, ValueError):
            errors.append(f"{key}: cannot interpret {merged[key]!r}")
            return None
        if v is not None and check is not None and not check(v):
            errors.append(f"{key}: {message} (got {v!r})")
        return v

    dim = take("dim", int, lambda v: v >= 1, "must be >= 1")
    cutoff = take("cutoff", int, lambda v: v >= 0, "must be >= 0")
    workers = take("workers", int, lambda v: v >= 1, "must be >= 1")
    fmt = merged["format"] or ("json" if args.command in ("borel", "verify") else "csv")
    if fmt not in ("csv", "json"):
        errors.append(f"format: must be csv or json (got {fmt!r})")

    potential = None
    text = str(merged["potential"])
    if dim is not None:
        try:
            potential = parse_potential(text, dim)
        except (ParseError, ValidationError) as exc:
            errors.append(f"potential: {exc}")

    g_values = []
    if merged["g-grid"] is not None:
        try:
            g_values = _parse_grid(str(merged["g-grid"]))
        except ConfigError as exc:
            errors.append(str(exc))
    else:
        g = take("g", float, math.isfinite, "must be finite")
        g_values = [g] if g is not None else []

    options = {}
    cmd = args.command
    if cmd in ("perturb", "borel"):
        options["order"] = take("order", int, lambda v: v >= 1, "must be >= 1")
        level = merged["level"]
        if level is None and dim is not None:
            options["level"] = MultiIndex((0,) * dim)
        elif level is not None:
            try:
                options["level"] = MultiIndex(tuple(int(x) for x in str(level).split(",")))
                if dim is not None and options["level"].dim != dim:
                    errors.append(f"level: needs {dim} entries")
            except ValueError:
                errors.append(f"level: expected comma-separated integers, got {level!r}")
    if cmd == "borel":
        options["q"] = take("order-q", float, lambda v: v > 0, "must be positive")
        options["nodes"] = take("nodes", int, lambda v: v >= 1, "must be >= 1")
        options["compare_direct"] = _as_bool(merged["compare-direct"])
        rule = str(merged["quadrature"])
        if rule not in QUADRATURE_RULES:
            errors.append(f"quadrature: one of {QUADRATURE_RULES}")
        options["quadrature"] = rule
        pade = merged["pade"]
        options["pade"] = None
        if pade is not None:
            try:
                m, mp = (int(x) for x in str(pade).split(","))
                options["pade"] = (m, mp)
            except ValueError:
                errors.append(f"pade: expected M,Mp, got {pade!r}")
        if any(g < 0 for g in g_values):
            errors.append("g: Borel summation needs g >= 0")
    if cmd == "verify":
        names = merged["checks"]
        names = [n.strip() for n in str(names).split(",")] if names else list(CHECKS)
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            errors.append(f"checks: unknown {unknown}; choose from {sorted(CHECKS)}")
        options["checks"] = names
        options["k_max"] = take("k-max", int, lambda v: v >= 1, "must be >= 1")
        order = str(merged["weyl-order"])
        if order not in WEYL_ORDERINGS:
            errors.append(f"weyl-order: one of {WEYL_ORDERINGS}")
        options["weyl_order"] = order
        options["window"] = take("window", int, lambda v: v >= 1, "must be >= 1")
        options["trials"] = take("trials", int, lambda v: v >= 1, "must be >= 1")
    if cmd == "sweep":
        quantity = str(merged["quantity"])
        if quantity not in ("singular", "eigen"):
            errors.append("quantity: must be singular or eigen")
        options["quantity"] = quantity
        options["count"] = take("count", int, lambda v: v >= 1, "must be >= 1")
        if merged["g-grid"] is None:
            errors.append("g-grid: sweep requires --g-grid start:stop:count")
    if merged["dump-matrix"] and len(g_values) > 1:
        errors.append("dump-matrix: only allowed with a single --g")

    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
    return RunConfig(
        command=cmd,
        dim=dim,
        cutoff=cutoff,
        cutoff_explicit="cutoff" in explicit,
        potential=potential,
        potential_text=text,
        g_values=g_values,
        format=fmt,
        output=merged["output"],
        dump_matrix=merged["dump-matrix"],
        workers=workers,
        options=options,
    )


# ---------------------------------------------------------------- emission


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_csv(header, rows, trailer=()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    for line in trailer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def render_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def emit(cfg: RunConfig, text: str) -> None:
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _maybe_dump(cfg: RunConfig, which: str = "H") -> None:
    if not cfg.dump_matrix:
        return
    g = cfg.g_values[0]
    t = cfg.truncation
    if which == "Q":
        M = assemble_q(t, cfg.potential, g)
    else:
        M = assemble_h(t, cfg.potential, g)
    dump_matrix(M, cfg.dump_matrix, potential=cfg.potential_text, g=g)


def _pool_map(cfg: RunConfig, fn, items):
    if cfg.workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(fn, items))  # map preserves input order


# ---------------------------------------------------------------- commands


def cmd_spectrum(cfg: RunConfig) -> int:
    t = cfg.truncation
    _maybe_dump(cfg, "H")
    spectra = _pool_map(cfg, lambda g: eig_general(assemble_h(t, cfg.potential, g)).values, cfg.g_values)
    rows = []
    records = []
    for g, vals in zip(cfg.g_values, spectra):
        for i, lam in enumerate(vals):
            rows.append([g, i, float(lam.real), float(lam.imag)])
            records.append({"g": g, "index": i, "re": float(lam.real), "im": float(lam.imag)})
    if cfg.format == "csv":
        emit(cfg, render_csv(["g", "index", "re_lambda", "im_lambda"], rows))
    else:
        emit(cfg, render_json(records))
    return EXIT_OK


def _singular_rows(t, W, g):
    vals = eig_hermitian(assemble_q(t, W, g), vectors=False).values
    order = np.lexsort((vals, np.abs(vals)))
    out = []
    for i, k in enumerate(order):
        signed = float(vals[k])
        out.append([g, i, abs(signed), signed, 1 if signed > 0 else -1])
    return out


def cmd_singular(cfg: RunConfig) -> int:
    t = cfg.truncation
    _maybe_dump(cfg, "Q")
    blocks = _pool_map(cfg, lambda g: _singular_rows(t, cfg.potential, g), cfg.g_values)
    rows = [r for b in blocks for r in b]
    header = ["g", "index", "mu", "signed", "parity"]
    if cfg.format == "csv":
        emit(cfg, render_csv(header, rows))
    else:
        emit(cfg, render_json([dict(zip(header, r)) for r in rows]))
    return EXIT_OK


def _perturb_truncation(cfg: RunConfig, level: MultiIndex, order: int) -> BasisTruncation:
    needed = level.principal + order * cfg.potential.degree + 2
    if cfg.cutoff_explicit:
        return cfg.truncation
    return BasisTruncation(cfg.dim, max(cfg.cutoff, needed))


def cmd_perturb(cfg: RunConfig) -> int:
    level, order = cfg.options["level"], cfg.options["order"]
    t = _perturb_truncation(cfg, level, order)
    series = rs_coefficients(t, cfg.potential, level, order)
    try:
        fit = coefficient_growth_fit(series)._asdict()
    except InsufficientOrders as exc:
        fit = {"error": str(exc)}
    fit["q_expected"] = default_q(cfg.potential.K)
    if cfg.format == "csv":
        trailer = ["growth_fit " + " ".join(f"{k}={_fmt(v)}" for k, v in fit.items())]
        text = series.to_csv() + "".join(f"# {line}\n" for line in trailer)
        emit(cfg, text)
    else:
        emit(
            cfg,
            render_json(
                {
                    "level": list(level.entries),
                    "cutoff": t.cutoff,
                    "potential": cfg.potential_text,
                    "coefficients": [
                        {"s": s, "mu_s": float(m), "stability_estimate": float(st)}
                        for s, (m, st) in enumerate(zip(series.coefficients, series.stability))
                    ],
                    "growth_fit": fit,
                }
            ),
        )
    return EXIT_OK


def cmd_borel(cfg: RunConfig) -> int:
    level, order = cfg.options["level"], cfg.options["order"]
    t = _perturb_truncation(cfg, level, order)
    series = rs_coefficients(t, cfg.potential, level, order)
    q = cfg.options["q"] or default_q(cfg.potential.K)

    def one(g):
        res = borel_sum(
            series, g, q, cfg.options["nodes"], cfg.options["pade"],
            quadrature=cfg.options["quadrature"],
        )
        d = res.to_dict()
        if cfg.options["compare_direct"]:
            direct = branch_value(t, cfg.potential, g, level)
            d["direct"] = direct
            d["relative_deviation"] = abs(res.value - direct) / abs(direct)
        return d

    results = _pool_map(cfg, one, cfg.g_values)
    if cfg.format == "json":
        emit(cfg, render_json(results[0] if len(results) == 1 else results))
    else:
        header = list(results[0].keys())
        rows = []
        for d in results:
            row = []
            for k in header:
                v = d[k]
                if k == "continuation_poles":
                    v = ";".join(f"{_fmt(a)}{'+' if b >= 0 else ''}{_fmt(b)}j" for a, b in v)
                elif isinstance(v, list):
                    v = ";".join(_fmt(x) for x in v)
                row.append(v)
            rows.append(row)
        emit(cfg, render_csv(header, rows))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    t = cfg.truncation
    opts = cfg.options
    names = opts["checks"]
    reports = []
    for g in cfg.g_values:
        for name in names:
            kwargs = {}
            if name == "weyl":
                kwargs = {"k_max": opts["k_max"], "ordering": opts["weyl_order"]}
            elif name == "eigen_relation":
                kwargs = {"window": opts["window"]}
            elif name == "canonical_expansion":
                kwargs = {"n_trials": opts["trials"]}
            reports.append((CHECKS[name], g, kwargs))
    done = _pool_map(cfg, lambda job: job[0](t, cfg.potential, job[1], **job[2]), reports)
    if cfg.format == "json":
        emit(cfg, render_json([r.to_dict() for r in done]))
    else:
        rows = [
            [r.check_name, r.parameters["g"], r.kind, r.measured_discrepancy, r.tolerance, r.passed]
            for r in done
        ]
        emit(cfg, render_csv(["check", "g", "kind", "discrepancy", "tolerance", "passed"], rows))
    return EXIT_OK if all_passed(done) else EXIT_CHECK_FAILED


def _decompose(t, W, g, quantity):
    if quantity == "singular":
        dec = eig_hermitian(assemble_q(t, W, g))
        return dec.values, dec.vectors
    w, v = sla.eig(assemble_h(t, W, g).entries)
    order = canonical_order(w)
    v = v[:, order]
    return w[order], v / np.linalg.norm(v, axis=0)


def track_branches(decompositions):
    """Greedy maximal-overlap matching of eigenvectors between adjacent grid points.

    Returns, per grid point, an index array ``perm`` with ``perm[b]`` the
    column holding branch ``b``; branches are labelled by their order at
    the first grid point.
    """
    first_vals, first_vecs = decompositions[0]
    n = first_vals.size
    perms = [np.arange(n)]
    prev_vecs = first_vecs
    for vals, vecs in decompositions[1:]:
        overlap = np.abs(prev_vecs.conj().T @ vecs)  # [branch, column]
        order = np.argsort(-overlap, axis=None, kind="stable")
        perm = np.full(n, -1)
        used_b = np.zeros(n, bool)
        used_c = np.zeros(n, bool)
        for flat in order:
            b, c = divmod(int(flat), n)
            if used_b[b] or used_c[c]:
                continue
            perm[b] = c
            used_b[b] = used_c[c] = True
            if used_b.all():
                break
        perms.append(perm)
        prev_vecs = vecs[:, perm]
    return perms


def cmd_sweep(cfg: RunConfig) -> int:
    t = cfg.truncation
    quantity = cfg.options["quantity"]
    count = cfg.options["count"]
    decs = _pool_map(cfg, lambda g: _decompose(t, cfg.potential, g, quantity), cfg.g_values)
    vals0 = decs[0][0]
    # branches labelled by the lowest |value| (singular) or canonical order (eigen) at the first g
    start = np.lexsort((vals0.real, np.abs(vals0))) if quantity == "singular" else np.arange(vals0.size)
    perms = track_branches(decs)
    rows = []
    for g, (vals, _), perm in zip(cfg.g_values, decs, perms):
        for b, col0 in enumerate(start[:count]):
            z = vals[perm[col0]]
            if quantity == "singular":
                rows.append([g, b, abs(float(z.real)), float(z.real)])
            else:
                rows.append([g, b, float(z.real), float(z.imag)])
    header = ["g", "branch", "mu", "signed"] if quantity == "singular" else ["g", "branch", "re_lambda", "im_lambda"]
    if cfg.format == "csv":
        emit(cfg, render_csv(header, rows))
    else:
        emit(cfg, render_json([dict(zip(header, r)) for r in rows]))
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "singular": cmd_singular,
    "perturb": cmd_perturb,
    "borel": cmd_borel,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptsingular",
        description="Singular values and spectra of -Δ + x² + igW(x) in a Hermite basis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat key = value file; flags take precedence")
    shared.add_argument("--dim", type=str, help="dimension d (default 1)")
    shared.add_argument("--cutoff", type=str, help="maximal principal quantum number L (default 30)")
    shared.add_argument("--potential", help='odd homogeneous polynomial, e.g. "x1^2*x2"')
    g = shared.add_mutually_exclusive_group()
    g.add_argument("--g", type=str, help="real coupling (default 0)")
    g.add_argument("--g-grid", help="start:stop:count")
    shared.add_argument("--format", choices=["csv", "json"])
    shared.add_argument("--output", help="output path (default stdout)")
    shared.add_argument("--dump-matrix", help="write the assembled matrix to this path")
    shared.add_argument("--workers", type=str, help="worker threads for grid points")

    sub.add_parser("spectrum", parents=[shared], help="eigenvalues of H(g)")
    sub.add_parser("singular", parents=[shared], help="singular values via Q(g) = P H(g)")

    series_opts = argparse.ArgumentParser(add_help=False)
    series_opts.add_argument("--level", help="unperturbed multi-index, e.g. 0 or 0,0")
    series_opts.add_argument("--order", type=str, help="highest perturbation order N (default 16)")

    sub.add_parser("perturb", parents=[shared, series_opts], help="Rayleigh-Schrödinger coefficients")
    p = sub.add_parser("borel", parents=[shared, series_opts], help="Borel-Leroy-Padé sum")
    p.add_argument("--order-q", help="Leroy order q (default (2K-1)/2)")
    p.add_argument("--pade", help="Padé degrees M,Mp (default N/2,N/2)")
    p.add_argument("--nodes", help="quadrature nodes (default 64)")
    p.add_argument("--quadrature", choices=list(QUADRATURE_RULES),
                   help="laguerre, moment, or auto (default)")
    p.add_argument("--compare-direct", action="store_true", default=None,
                   help="also report the directly diagonalized branch")

    p = sub.add_parser("verify", parents=[shared], help="run identity checks; exit 1 on failure")
    p.add_argument("--checks", help=f"comma list from {','.join(CHECKS)}")
    p.add_argument("--k-max", help="Weyl inequalities up to k (default 10)")
    p.add_argument("--weyl-order", choices=list(WEYL_ORDERINGS))
    p.add_argument("--window", help="index window for the eigen relation (default 8)")
    p.add_argument("--trials", help="random vectors for the canonical expansion (default 20)")

    p = sub.add_parser("sweep", parents=[shared], help="branch-tracked values over a g grid")
    p.add_argument("--quantity", choices=["singular", "eigen"])
    p.add_argument("--count", help="number of branches (default 4)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[cfg.command](cfg)
    except (DegenerateLevel, TruncationTooSmall, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceFailure, NoConvergence, SingularShift, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
