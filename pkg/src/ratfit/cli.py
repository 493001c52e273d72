"""Command-line interface: fit and compare methods, generate data, check Jacobians."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .aaa import aaa_fit, barycentric_poles
from .bases import coefficients_from_roots, make_basis
from .core import FitReport, SampleSet, residual_norm
from .optimizer import GnOptions, fit_rational
from .sk import sk_fit
from .synthetic import imaginary_segment, layered_scheme, random_instance, random_stable_model, sample_model
from .varpro import VarproProblem
from .vecfit import vf_fit
from .weights import Weight, cauchy_weight

__all__ = [
    "METHODS",
    "ConfigError",
    "RunConfig",
    "parse_samples",
    "serialize_samples",
    "run_compare",
    "check_jacobian",
    "main",
]

HEADER = ["z_re", "z_im", "f_re", "f_im"]
METHODS = ("aaa", "sk", "vf", "gn-poly", "gn-poly-real", "gn-pf", "gn-pf-real")
GN_PARAM = {"gn-poly": "poly", "gn-poly-real": "poly_real", "gn-pf": "pf", "gn-pf-real": "pf_real"}
COLUMNS = [
    "m", "n", "method", "status", "normalized_residual", "weighted_residual",
    "gradient_norm", "iterations", "converged", "condition", "error",
]


class ConfigError(ValueError):
    """Invalid input file or configuration; reported with exit code 2."""


# ---------------------------------------------------------------- sample I/O


def parse_samples(path_or_text, *, text: bool = False) -> SampleSet:
    """Read samples from a CSV file with header ``z_re,z_im,f_re,f_im``.

    Parameters
    ----------
    path_or_text : str or path
        File path, or the CSV contents when ``text=True``.  A body without
        the header line is accepted too.

    Raises
    ------
    ConfigError
        On malformed rows (reporting line and column numbers) or duplicate
        points (naming every row that shares the point).
    """
    if text:
        content = str(path_or_text)
    else:
        try:
            with open(path_or_text, newline="") as fh:
                content = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read {path_or_text}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(content)))
    vals = []
    lines = []
    for lineno, row in enumerate(rows, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and [c.strip() for c in row] == HEADER:
            continue
        if len(row) != 4:
            raise ConfigError(f"line {lineno}: expected 4 columns, got {len(row)}")
        nums = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise ConfigError(f"line {lineno}, column {col}: cannot parse {cell.strip()!r} as a number") from None
            if not math.isfinite(v):
                raise ConfigError(f"line {lineno}, column {col}: non-finite value")
            nums.append(v)
        vals.append(nums)
        lines.append(lineno)
    if not vals:
        raise ConfigError("no samples found")
    arr = np.array(vals)
    z = arr[:, 0] + 1j * arr[:, 1]
    seen: dict[complex, list[int]] = {}
    for zz, ln in zip(z, lines):
        seen.setdefault(complex(zz), []).append(ln)
    dups = [v for v in seen.values() if len(v) > 1]
    if dups:
        desc = "; ".join("lines " + ", ".join(map(str, d)) for d in dups)
        raise ConfigError(f"duplicate sample points at {desc}")
    return SampleSet(z, arr[:, 2] + 1j * arr[:, 3])


def serialize_samples(samples: SampleSet) -> str:
    """CSV text (with header) that :func:`parse_samples` reads back exactly."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(HEADER)
    for z, f in zip(samples.points, samples.values):
        w.writerow([repr(float(v)) for v in (z.real, z.imag, f.real, f.imag)])
    return out.getvalue()


# ---------------------------------------------------------------- comparison


@dataclass
class RunConfig:
    input: str | None
    degrees: list[tuple[int, int]]
    methods: list[str]
    weight: str = "identity"
    seed: int = 0
    init: str = "aaa"
    gn: GnOptions = field(default_factory=GnOptions)
    sk_tol: float = 1e-10
    vf_tol: float = 1e-10
    max_iter_fixed_point: int = 50
    output: str | None = None
    format: str = "csv"
    start_at_optimum: bool = False
    timing: bool = False

    def validate(self) -> None:
        """Check method, degree and weight compatibility before any fit runs."""
        if not self.methods:
            raise ConfigError("no methods given")
        for meth in self.methods:
            if meth not in METHODS:
                raise ConfigError(f"unknown method {meth!r}; choose from {', '.join(METHODS)}")
        if not self.degrees:
            raise ConfigError("no degrees given")
        for m, n in self.degrees:
            if m < 0 or n < 0:
                raise ConfigError(f"degrees must be nonnegative, got ({m}, {n})")
            for meth in self.methods:
                if meth in ("vf", "gn-pf", "gn-pf-real") and m < n - 1:
                    raise ConfigError(f"method {meth} needs m >= n - 1, got ({m}, {n})")
        kind = self.weight.split(":", 1)[0]
        if kind not in ("identity", "diagonal", "cauchy"):
            raise ConfigError(f"unknown weight {self.weight!r}")
        if kind == "diagonal" and ":" not in self.weight:
            raise ConfigError("diagonal weight needs a file: diagonal:PATH")
        if kind == "cauchy":
            bad = [meth for meth in self.methods if meth in ("sk", "vf")]
            if bad:
                raise ConfigError(f"method(s) {', '.join(bad)} do not support the cauchy weight")
        if self.init not in ("aaa", "random"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")


def _build_weight(spec: str, samples: SampleSet):
    kind = spec.split(":", 1)[0]
    meta = {"weight": kind}
    if kind == "identity":
        return Weight.identity(), meta
    if kind == "diagonal":
        path = spec.split(":", 1)[1]
        try:
            d = np.loadtxt(path, dtype=float, ndmin=1)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read diagonal weight file {path}: {exc}") from exc
        if d.shape != (samples.N,):
            raise ConfigError(f"diagonal weight has {d.size} entries for {samples.N} samples")
        return Weight.diagonal(d), meta
    try:
        fac = cauchy_weight(samples.points)
    except ValueError as exc:
        raise ConfigError(f"cauchy weight: {exc}") from exc
    meta["whitening_error"] = fac.whitening_error()
    return fac.weight(), meta


def _pf_gradient(samples, weight, poles, m):
    """Gradient norm of the pole parameterization at ``poles``."""
    n = len(poles)
    m = max(m, n - 1)
    prob = VarproProblem.partial_fraction(samples, m, n, weight)
    return float(np.linalg.norm(prob.evaluate(prob.pack(poles)).gradient))


def _run_one(samples: SampleSet, weight: Weight, m: int, n: int, method: str, cfg: RunConfig) -> dict:
    row = {"m": m, "n": n, "method": method}
    t0 = time.perf_counter()
    try:
        cond = float("nan")
        if method == "aaa":
            r, hist = aaa_fit(samples, n)
            res = residual_norm(samples, r)
            wres = residual_norm(samples, r, weight)
            poles = barycentric_poles(r) if len(r.nodes) >= 2 else np.zeros(0, dtype=complex)
            try:
                grad = _pf_gradient(samples, weight, poles, n)
            except ValueError:
                grad = float("nan")
            report = FitReport(r, res, wres, grad, len(hist), True, {})
        elif method in ("sk", "vf"):
            start = None
            if cfg.start_at_optimum:
                opt = fit_rational(samples, max(m, n - 1), n, weight, "pf", options=cfg.gn)
                start = opt.model.poles
            if method == "sk":
                kwargs = {}
                if start is not None:
                    den = make_basis("scaled_legendre", n, samples)
                    kwargs["b_init"] = coefficients_from_roots(den, start)
                model, report, hist = sk_fit(samples, m, n, weight, max_iter=cfg.max_iter_fixed_point,
                                             tol=cfg.sk_tol, **kwargs)
                cond = hist[-1].iteration_matrix_cond if hist else cond
            else:
                model, report, hist = vf_fit(samples, n, m, initial_poles=start, weight=weight,
                                             max_iter=cfg.max_iter_fixed_point, tol=cfg.vf_tol)
                cond = hist[-1].iteration_matrix_cond if hist else cond
        else:
            report = fit_rational(samples, m, n, weight, GN_PARAM[method], init=cfg.init, seed=cfg.seed,
                                  options=cfg.gn)
            cond = report.diagnostics.get("basis_cond", cond)
        row.update(
            status="ok",
            normalized_residual=float(report.residual_norm / np.linalg.norm(samples.values)),
            weighted_residual=float(report.weighted_residual_norm),
            gradient_norm=float(report.gradient_norm),
            iterations=int(report.iterations),
            converged=bool(report.converged),
            condition=float(cond),
            error="",
        )
    except Exception as exc:  # a failed fit is reported in its row
        row.update(status="failed", normalized_residual=float("nan"), weighted_residual=float("nan"),
                   gradient_norm=float("nan"), iterations=0, converged=False, condition=float("nan"),
                   error=f"{type(exc).__name__}: {exc}")
    if cfg.timing:
        row["wall_time"] = float(time.perf_counter() - t0)
    return row


def _threads() -> int:
    raw = os.environ.get("RATFIT_THREADS")
    if raw is None:
        return 1
    try:
        k = int(raw)
    except ValueError:
        raise ConfigError(f"RATFIT_THREADS must be a positive integer, got {raw!r}") from None
    if k < 1:
        raise ConfigError("RATFIT_THREADS must be at least 1")
    return k


def run_compare(cfg: RunConfig, samples: SampleSet | None = None):
    """Run every (degree, method) pair and return ``(rows, metadata)``.

    Rows come back ordered by degree (as listed) then method (as listed),
    whatever order the worker pool finishes them in.
    """
    cfg.validate()
    if samples is None:
        if cfg.input is None:
            raise ConfigError("no input file")
        samples = parse_samples(cfg.input)
    weight, meta = _build_weight(cfg.weight, samples)
    meta["samples"] = samples.N
    jobs = [(m, n, meth) for (m, n) in cfg.degrees for meth in cfg.methods]
    workers = min(_threads(), len(jobs))
    if workers <= 1:
        rows = [_run_one(samples, weight, m, n, meth, cfg) for m, n, meth in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, samples, weight, m, n, meth, cfg) for m, n, meth in jobs]
            rows = [fu.result() for fu in futures]
    return rows, meta


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return str(v)


def format_table(rows, meta, fmt: str = "csv") -> str:
    if fmt == "json":
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v
        return json.dumps({"metadata": {k: clean(v) for k, v in meta.items()},
                           "rows": [{k: clean(v) for k, v in r.items()} for r in rows]}, indent=2) + "\n"
    cols = COLUMNS + (["wall_time"] if rows and "wall_time" in rows[0] else [])
    out = io.StringIO()
    for k in sorted(meta):
        out.write(f"# {k}={_fmt(meta[k])}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    return out.getvalue()


# ---------------------------------------------------------------- Jacobian check


def check_jacobian(parameterization: str, seed: int = 0, N: int = 50, n: int = 3, m: int | None = None,
                   weight_kind: str = "identity", h: float = 1e-6, tol: float = 1e-5) -> dict:
    """Compare the analytic Jacobian with central differences on a random instance.

    The reported ``max_rel_error`` is the largest entrywise relative
    deviation over entries of magnitude above ``1e-8``; ``normwise_error``
    is ``||J_fd - J||_F / ||J||_F``.  For the complex polynomial form the
    number of singular values below ``1e-8 sigma_max`` is also reported.
    """
    par = GN_PARAM.get(parameterization, parameterization)
    if par not in GN_PARAM.values():
        raise ConfigError(f"unknown parameterization {parameterization!r}")
    try:
        inst = random_instance(par, seed, N, n, m, weight_kind)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    prob, x = inst.problem, inst.x
    J = prob.evaluate(x).jacobian
    F = np.empty_like(J)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        F[:, i] = (prob.evaluate(x + e).stacked_residual - prob.evaluate(x - e).stacked_residual) / (2 * h)
    mask = np.abs(J) > 1e-8
    err = float(np.max(np.abs(F - J)[mask] / np.abs(J[mask]))) if mask.any() else 0.0
    report = {
        "parameterization": par,
        "seed": seed,
        "N": N,
        "m": prob.m,
        "n": n,
        "max_rel_error": err,
        "normwise_error": float(np.linalg.norm(F - J) / max(np.linalg.norm(J), 1e-300)),
        "passed": err < tol,
    }
    if par == "poly":
        s = np.linalg.svd(J, compute_uv=False)
        report["near_zero_singular_values"] = int(np.sum(s < 1e-8 * s[0]))
    return report


# ---------------------------------------------------------------- argument parsing


def _parse_degrees(specs: list[str]) -> list[tuple[int, int]]:
    """``m,n`` pairs, a bare ``n`` (meaning ``n-1,n``) or a range ``lo..hi`` of ``n``."""
    out = []
    for spec in specs:
        for part in spec.split(";"):
            part = part.strip()
            try:
                if ".." in part:
                    lo, hi = (int(t) for t in part.split(".."))
                    out += [(max(k - 1, 0), k) for k in range(lo, hi + 1)]
                elif "," in part:
                    m, n = (int(t) for t in part.split(","))
                    out.append((m, n))
                else:
                    k = int(part)
                    out.append((max(k - 1, 0), k))
            except ValueError:
                raise ConfigError(f"bad degree specification {part!r}") from None
    return out


def _apply_tols(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    gn = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--tol expects NAME=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        try:
            num = float(val)
        except ValueError:
            raise ConfigError(f"--tol {key}: cannot parse {val!r}") from None
        if key in ("max_iter",):
            gn[key] = int(num)
        elif key in ("grad_tol", "step_tol", "armijo_c", "backtrack_factor", "svd_truncation"):
            gn[key] = num
        elif key == "sk_tol":
            cfg.sk_tol = num
        elif key == "vf_tol":
            cfg.vf_tol = num
        elif key == "fixed_point_max_iter":
            cfg.max_iter_fixed_point = int(num)
        else:
            raise ConfigError(f"unknown tolerance {key!r}")
    if gn:
        try:
            cfg.gn = replace(cfg.gn, **gn)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ratfit", description="Least-squares rational approximation.")
    sub = p.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", aliases=["compare"], help="fit samples with one or more methods")
    fit.add_argument("input", help="CSV file with columns z_re,z_im,f_re,f_im")
    fit.add_argument("--degree", action="append", required=True,
                     help="'m,n', 'n' (for n-1,n) or 'lo..hi'; repeatable")
    fit.add_argument("--method", action="append", help=f"one of {', '.join(METHODS)}; repeatable or comma separated")
    fit.add_argument("--weight", default="identity", help="identity, diagonal:PATH or cauchy")
    fit.add_argument("--init", default="aaa", choices=["aaa", "random"])
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                     help="override grad_tol, step_tol, max_iter, armijo_c, backtrack_factor, svd_truncation, "
                          "sk_tol, vf_tol or fixed_point_max_iter")
    fit.add_argument("--start-at-optimum", action="store_true",
                     help="start sk and vf from the gn-pf optimum poles")
    fit.add_argument("--timing", action="store_true", help="add a wall_time column (output no longer reproducible)")
    fit.add_argument("--out", help="output file (default stdout)")
    fit.add_argument("--format", default="csv", choices=["csv", "json"])

    syn = sub.add_parser("synth", help="generate samples of a random stable model")
    syn.add_argument("--poles", type=int, default=12)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--scheme", default="segment", choices=["segment", "layered"],
                     help="'segment': equispaced on [-1000i, 1000i]; 'layered': 80/40/20/10 points at "
                          "Re z = 0.001/0.01/0.1/1")
    syn.add_argument("--samples", type=int, default=200, help="number of points for the segment scheme")
    syn.add_argument("--out", help="output file (default stdout)")

    chk = sub.add_parser("check-jacobian", help="finite-difference check of a parameterization")
    chk.add_argument("parameterization", help="gn-poly, gn-poly-real, gn-pf or gn-pf-real (or poly, ...)")
    chk.add_argument("--seed", type=int, action="append")
    chk.add_argument("--N", type=int, default=50)
    chk.add_argument("--n", type=int, default=3)
    chk.add_argument("--m", type=int)
    chk.add_argument("--weight", default="identity", choices=["identity", "diagonal", "dense"])
    return p


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("fit", "compare"):
            methods = [m.strip() for spec in (args.method or ["gn-pf"]) for m in spec.split(",") if m.strip()]
            cfg = RunConfig(input=args.input, degrees=_parse_degrees(args.degree), methods=methods,
                            weight=args.weight, seed=args.seed, init=args.init, output=args.out,
                            format=args.format, start_at_optimum=args.start_at_optimum, timing=args.timing)
            cfg = _apply_tols(cfg, args.tol)
            cfg.validate()
            rows, meta = run_compare(cfg)
            _write(format_table(rows, meta, cfg.format), cfg.output)
            return 1 if any(r["status"] != "ok" for r in rows) else 0
        if args.command == "synth":
            if args.poles < 1:
                raise ConfigError("--poles must be positive")
            model = random_stable_model(args.poles, args.seed)
            if args.scheme == "segment":
                if args.samples < 1:
                    raise ConfigError("--samples must be positive")
                pts = imaginary_segment(args.samples)
            else:
                pts = layered_scheme(args.seed)
            _write(serialize_samples(sample_model(model, pts)), args.out)
            return 0
        if args.command == "check-jacobian":
            seeds = args.seed or [0]
            ok = True
            for s in seeds:
                rep = check_jacobian(args.parameterization, s, args.N, args.n, args.m, args.weight)
                ok &= rep["passed"]
                line = " ".join(f"{k}={_fmt(v)}" for k, v in rep.items())
                print(("PASS " if rep["passed"] else "FAIL ") + line)
            return 0 if ok else 1
    except ConfigError as exc:
        print(f"ratfit: error: {exc}", file=sys.stderr)
        return 2
    return 2  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
