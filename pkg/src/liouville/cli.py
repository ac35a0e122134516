"""Command-line front end.

Three subcommands:

``eval``
    Evaluate an analytic quantity (structure constant, reflection
    coefficient, Upsilon, shift/crossing coefficients) and print one JSON
    record, or a CSV row with ``--csv``.

``check``
    Run the randomized identity suites and print a pass/fail table.
    Exit status 0 iff every identity holds at the requested tolerance.

``mc``
    Run a Monte Carlo experiment.  Writes a JSON-lines result file plus a
    manifest side-file, prints mean +- stderr and the z-score against the
    closed-form comparator.  ``--replay <manifest>`` reruns a previous
    experiment from its manifest; result files come out byte-identical.

Exit codes: 0 success, 1 identity failure, 2 precondition violation,
3 numerical failure (variance-blowup flag, insufficient tail).

Configuration precedence is flags > config file > built-in defaults.  The
config file (``--config``) is plain ``key = value`` text using the long
option names.  The only environment variable consulted is ``NO_COLOR``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

from . import __version__
from .dozz import (
    LiouvilleParams,
    WeightTriple,
    b_coefficient,
    c_dozz,
    crossing_T,
    crossing_T_tilde,
    identity_suite,
    r_dozz,
    shift_coefficient_A,
    four_point_rhs,
)
from .errors import (
    BoundsError,
    InsufficientTailError,
    LiouvilleError,
    PoleError,
    PrecisionError,
    RegimeError,
    SeibergBoundError,
    VarianceBlowupError,
)
from .estimators import (
    MCConfig,
    PathConfig,
    estimate_four_point,
    estimate_reflection,
    estimate_three_point,
    estimate_two_point_limit,
    fit_tail_one_insertion,
    four_point_grid,
    moment_scaling_report,
)
from .gmc import CylinderGrid
from .specfun import UpsilonConfig, upsilon, upsilon_suite

_PRECONDITION_ERRORS = (BoundsError, SeibergBoundError, PoleError, RegimeError)
_NUMERICAL_ERRORS = (VarianceBlowupError, InsufficientTailError, PrecisionError)
_RUN_HASH_EXCLUDED = frozenset({"hash", "workers", "started_unix", "finished_unix"})


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------


def _use_color() -> bool:
    return "NO_COLOR" not in os.environ and sys.stdout.isatty()


def _paint(text: str, code: str) -> str:
    if _use_color():
        return f"\x1b[{code}m{text}\x1b[0m"
    return text


def _parse_complex(text: str) -> complex:
    """Accept '1.25', '1.25,0.5', or python-style '1.25+0.5j'."""
    text = text.strip()
    if "," in text:
        re_part, im_part = text.split(",", 1)
        return complex(float(re_part), float(im_part))
    return complex(text)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(";", ",").split(",") if tok.strip())


def _jsonable(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, tuple):
        return list(value)
    return value


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _run_hash(manifest: dict) -> str:
    core = {k: v for k, v in manifest.items() if k not in _RUN_HASH_EXCLUDED}
    if "params" in core:
        # worker count never changes results, so it never changes the hash
        core["params"] = {k: v for k, v in core["params"].items()
                          if k != "workers"}
    return hashlib.sha256(_canonical(core).encode()).hexdigest()


def _fail(code: int, message: str) -> int:
    print(message, file=sys.stderr)
    return code


def _read_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line is not 'key = value': {raw.rstrip()}")
            key, val = line.split("=", 1)
            values[key.strip().replace("_", "-")] = val.strip()
    return values


def _splice_config(argv: list[str]) -> list[str]:
    """Insert config-file values as low-precedence flags.

    The config entries are turned into ``--key value`` pairs placed before
    the user's own flags, so an explicit flag always wins (argparse keeps
    the last occurrence of a simple option).
    """
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return argv
    injected: list[str] = []
    for key, val in _read_config(known.config).items():
        injected.extend([f"--{key}", val])
    # keep the subcommand (and any leading positionals) in front
    head: list[str] = []
    tail = list(rest)
    while tail and not tail[0].startswith("-"):
        head.append(tail.pop(0))
    return head + injected + tail


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

_EVAL_CSV_COLUMNS = (
    "quantity",
    "gamma",
    "mu",
    "alpha",
    "alphas",
    "z",
    "chi",
    "eps",
    "alpha_prime",
    "value",
    "value_imag",
    "err_bound",
)


def _eval_record(args) -> dict:
    p = LiouvilleParams(args.gamma, args.mu)
    q = args.quantity
    record: dict = {"quantity": q, "gamma": args.gamma, "mu": args.mu}

    def need(flag: str, value):
        if value is None:
            raise BoundsError(f"missing --{flag}")
        return value

    if q == "dozz":
        w = WeightTriple(*need("alphas", args.alphas))
        res = c_dozz(w, p)
        record.update(alphas=list(args.alphas), value=res.value.real,
                      value_imag=res.value.imag, err_bound=res.err_bound)
    elif q == "rdozz":
        val = r_dozz(need("alpha", args.alpha), p)
        record.update(alpha=args.alpha, value=val.real, value_imag=val.imag,
                      err_bound=None)
    elif q == "upsilon":
        z = need("z", args.z)
        res = upsilon(z, UpsilonConfig(gamma=args.gamma))
        record.update(z=_jsonable(z), value=res.value.real,
                      value_imag=res.value.imag, err_bound=res.err_bound)
    elif q == "coefA":
        w = WeightTriple(*need("alphas", args.alphas))
        val = shift_coefficient_A(need("chi", args.chi), w, p)
        record.update(chi=args.chi, alphas=list(args.alphas), value=val.real,
                      value_imag=val.imag, err_bound=None)
    elif q == "coefB":
        val = b_coefficient(need("alpha", args.alpha), p)
        record.update(alpha=args.alpha, value=val.real, value_imag=val.imag,
                      err_bound=None)
    elif q == "coefT":
        val = crossing_T(need("alpha-prime", args.alpha_prime),
                         need("eps", args.eps), need("alpha", args.alpha), p)
        record.update(alpha_prime=args.alpha_prime, eps=args.eps,
                      alpha=args.alpha, value=val.real, value_imag=val.imag,
                      err_bound=None)
    else:  # coefTtilde
        val = crossing_T_tilde(need("alpha", args.alpha), need("eps", args.eps),
                               need("alpha-prime", args.alpha_prime), p)
        record.update(alpha=args.alpha, eps=args.eps,
                      alpha_prime=args.alpha_prime, value=val.real,
                      value_imag=val.imag, err_bound=None)

    record["provenance"] = {"code_version": __version__, "tool": "eval"}
    return record


def cmd_eval(args) -> int:
    try:
        record = _eval_record(args)
    except _PRECONDITION_ERRORS as exc:
        return _fail(2, f"eval {args.quantity}: {exc}")
    if args.csv:
        row = [str(_csv_cell(record.get(col))) for col in _EVAL_CSV_COLUMNS]
        print(",".join(_EVAL_CSV_COLUMNS))
        print(",".join(row))
    else:
        print(_canonical(record))
    return 0


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (list, tuple)):
        return ";".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    reports = []
    if args.suite in ("specfun", "all"):
        reports += [
            ("specfun", r.as_dict(), r.passed)
            for r in upsilon_suite(args.gamma, n_points=args.points,
                                   seed=args.seed, tol=args.tol)
        ]
    if args.suite in ("dozz", "all"):
        p = LiouvilleParams(args.gamma, args.mu)
        reports += [
            ("dozz", r.as_dict(), r.passed)
            for r in identity_suite(p, n_points=args.points, seed=args.seed,
                                    tol=args.tol)
        ]

    grouped: dict[str, list[tuple[dict, bool]]] = {}
    for suite, rec, ok in reports:
        grouped.setdefault(f"{suite}:{rec['name']}", []).append((rec, ok))

    all_ok = True
    for name in sorted(grouped):
        rows = grouped[name]
        worst = max(r["residual"] for r, _ in rows)
        ok = all(flag for _, flag in rows)
        all_ok &= ok
        status = _paint("ok", "32") if ok else _paint("FAIL", "31")
        print(f"{name:42s} n={len(rows):3d}  max_residual={worst:.3e}  {status}")
        if not ok:
            for rec, flag in rows:
                if not flag:
                    print(f"    residual {rec['residual']:.3e} > tol "
                          f"{rec['tol']:.1e} at {rec.get('point', {})}")
    print(f"{len(reports)} checks, "
          f"{sum(1 for _, _, ok in reports if not ok)} failures")
    return 0 if all_ok else 1


# ---------------------------------------------------------------------------
# mc experiments
# ---------------------------------------------------------------------------

_MC_CSV_COLUMNS: dict[str, tuple[str, ...]] = {
    "three-point": ("quantity", "gamma", "mu", "alpha1", "alpha2", "alpha3",
                    "mean", "stderr", "n", "dozz_value", "z_score", "seed"),
    "reflection": ("quantity", "gamma", "mu", "alpha", "mean", "stderr", "n",
                   "dozz_value", "z_score", "seed"),
    "two-point-limit": ("quantity", "gamma", "mu", "alpha", "alpha2", "eps",
                        "mean", "stderr", "n", "dozz_value", "z_score", "seed"),
    "tail": ("quantity", "gamma", "mu", "alpha", "z", "kind", "mean", "stderr",
             "n", "dozz_value", "z_score", "seed"),
    "four-point": ("quantity", "gamma", "mu", "z_re", "z_im", "alpha0",
                   "alpha1", "alpha2", "alpha3", "mean", "stderr", "n",
                   "dozz_value", "z_score", "seed"),
    "moments": ("quantity", "gamma", "alpha", "kind", "p", "mean", "stderr",
                "n", "dozz_value", "z_score", "seed"),
}


def _grid_from_spec(spec: dict[str, float] | None, anchors) -> CylinderGrid:
    spec = dict(spec or {})
    level = int(spec.pop("levels", 6))
    half_width = float(spec.pop("half_width", 12.0))
    cells_per_unit = int(spec.pop("cells_per_unit", 20))
    n_modes = int(spec.pop("n_modes", 16))
    n_theta = int(spec.pop("n_theta", 4 * n_modes))
    if spec:
        raise BoundsError(f"unknown --grid keys: {sorted(spec)}")
    n_s = int(round(2.0 * half_width * cells_per_unit))
    refine = tuple((s0, th0, level) for s0, th0 in anchors)
    return CylinderGrid(-half_width, half_width, n_s, n_theta, n_modes,
                        refine=refine)


def _zscore(mean: float, stderr: float, target: float) -> float:
    return (mean - target) / stderr if stderr > 0 else math.inf


def _summary_line(label: str, mean: float, stderr: float, n: int,
                  target, z) -> str:
    line = f"{label}: mean {mean:.6g} +- {stderr:.3g}  n={n}"
    if target is not None:
        line += f"  comparator {target:.6g}  z={z:+.2f}"
    return line


def _mc_three_point(params: dict) -> tuple[list[dict], list[str], list[dict]]:
    p = LiouvilleParams(params["gamma"], params["mu"])
    w = WeightTriple(*params["alphas"])
    grid = CylinderGrid.from_dict(params["grid"])
    cfg = MCConfig(params["samples"], grid, params["seed"], params["batch"])
    est = estimate_three_point(w, p, cfg, workers=params["workers"],
                               unit_volume=params["unit_volume"])
    target = c_dozz(w, p).value.real
    if params["unit_volume"]:
        s = w.s(p)
        target = target * p.mu**s / math.gamma(s)
    z = _zscore(est.mean, est.stderr, target)
    a1, a2, a3 = params["alphas"]
    record = {
        "quantity": "three-point", "gamma": p.gamma, "mu": p.mu,
        "alpha1": a1, "alpha2": a2, "alpha3": a3,
        "unit_volume": params["unit_volume"],
        "mean": est.mean, "stderr": est.stderr, "n": est.n,
        "dozz_value": target, "z_score": z, "seed": params["seed"],
        "manifest_hash": est.manifest["hash"],
        "variance_ok": est.manifest["variance_ok"],
    }
    return [record], [_summary_line("three-point", est.mean, est.stderr,
                                    est.n, target, z)], [est.manifest]


def _mc_reflection(params: dict) -> tuple[list[dict], list[str], list[dict]]:
    p = LiouvilleParams(params["gamma"], params["mu"])
    cfg = MCConfig(params["samples"], None, params["seed"], params["batch"])
    path_cfg = PathConfig(horizon=params["horizon"],
                          z_spacing=params["z_spacing"])
    est = estimate_reflection(params["alpha"], p, cfg, path_cfg,
                              workers=params["workers"])
    target = r_dozz(params["alpha"], p).real
    z = _zscore(est.mean, est.stderr, target)
    record = {
        "quantity": "reflection", "gamma": p.gamma, "mu": p.mu,
        "alpha": params["alpha"],
        "mean": est.mean, "stderr": est.stderr, "n": est.n,
        "dozz_value": target, "z_score": z, "seed": params["seed"],
        "manifest_hash": est.manifest["hash"],
    }
    return [record], [_summary_line("reflection", est.mean, est.stderr,
                                    est.n, target, z)], [est.manifest]


def _mc_two_point(params: dict) -> tuple[list[dict], list[str], list[dict]]:
    p = LiouvilleParams(params["gamma"], params["mu"])
    grid = CylinderGrid.from_dict(params["grid"])
    cfg = MCConfig(params["samples"], grid, params["seed"], params["batch"])
    rep = estimate_two_point_limit(params["alpha"], params["eps"], p, cfg,
                                   alpha2=params["alpha2"],
                                   workers=params["workers"])
    target = rep.a_factor * r_dozz(params["alpha"], p).real
    records = []
    base = {"quantity": "two-point-limit", "gamma": p.gamma, "mu": p.mu,
            "alpha": params["alpha"], "alpha2": rep.alpha2,
            "seed": params["seed"]}
    for eps, est in zip(rep.eps, rep.estimates):
        records.append({**base, "eps": eps, "mean": est.mean,
                        "stderr": est.stderr, "n": est.n,
                        "dozz_value": None, "z_score": None,
                        "manifest_hash": est.manifest["hash"],
                        "variance_ok": est.manifest["variance_ok"]})
    z = _zscore(rep.extrapolated_mean, rep.extrapolated_stderr, target)
    records.append({**base, "eps": 0.0, "mean": rep.extrapolated_mean,
                    "stderr": rep.extrapolated_stderr,
                    "n": params["samples"] * len(rep.eps),
                    "dozz_value": target, "z_score": z,
                    "manifest_hash": rep.manifest["hash"]})
    lines = [_summary_line(f"eps={eps:g}", est.mean, est.stderr, est.n,
                           None, None)
             for eps, est in zip(rep.eps, rep.estimates)]
    lines.append(_summary_line("extrapolated", rep.extrapolated_mean,
                               rep.extrapolated_stderr,
                               params["samples"] * len(rep.eps), target, z))
    child = [est.manifest for est in rep.estimates]
    return records, lines, child + [rep.manifest]


def _mc_tail(params: dict) -> tuple[list[dict], list[str], list[dict]]:
    p = LiouvilleParams(params["gamma"], params["mu"])
    cfg = MCConfig(params["samples"], None, params["seed"], params["batch"])
    z = complex(*params["z"]) if isinstance(params["z"], list) else params["z"]
    rep = fit_tail_one_insertion(params["alpha"], z, None, p, cfg,
                                 rbar=params["rbar"],
                                 workers=params["workers"])
    z_slope = (rep.fitted_slope - rep.theory_slope) / rep.slope_ci
    ratio = rep.amplitude / rep.theory_amplitude
    base = {"quantity": "tail", "gamma": p.gamma, "mu": p.mu,
            "alpha": params["alpha"], "z": _jsonable(params["z"]),
            "n": params["samples"], "seed": params["seed"],
            "manifest_hash": rep.manifest["hash"]}
    records = [
        {**base, "kind": "slope", "mean": rep.fitted_slope,
         "stderr": rep.slope_ci, "dozz_value": rep.theory_slope,
         "z_score": z_slope},
        {**base, "kind": "amplitude", "mean": rep.amplitude, "stderr": None,
         "dozz_value": rep.theory_amplitude, "z_score": None,
         "x_range": list(rep.x_range), "n_tail": rep.n_tail},
    ]
    lines = [
        f"tail slope: {rep.fitted_slope:.4f} +- {rep.slope_ci:.4f}  "
        f"theory {rep.theory_slope:.4f}  z={z_slope:+.2f}",
        f"tail amplitude: {rep.amplitude:.6g}  theory "
        f"{rep.theory_amplitude:.6g}  ratio {ratio:.3f}",
    ]
    return records, lines, [rep.manifest]


def _mc_four_point(params: dict) -> tuple[list[dict], list[str], list[dict]]:
    p = LiouvilleParams(params["gamma"], params["mu"])
    w = WeightTriple(*params["alphas"])
    z = complex(*params["z"]) if isinstance(params["z"], list) else params["z"]
    grid = CylinderGrid.from_dict(params["grid"])
    cfg = MCConfig(params["samples"], grid, params["seed"], params["batch"])
    est = estimate_four_point(z, w, params["alpha0"], p, cfg,
                              workers=params["workers"])
    try:
        target = four_point_rhs(z, w, params["alpha0"], p).value.real
        zsc = _zscore(est.mean, est.stderr, target)
    except (RegimeError, PoleError) as exc:
        target, zsc = None, None
        comparator_note = f"comparator unavailable: {exc}"
    else:
        comparator_note = None
    a1, a2, a3 = params["alphas"]
    record = {
        "quantity": "four-point", "gamma": p.gamma, "mu": p.mu,
        "z_re": z.real, "z_im": z.imag, "alpha0": params["alpha0"],
        "alpha1": a1, "alpha2": a2, "alpha3": a3,
        "mean": est.mean, "stderr": est.stderr, "n": est.n,
        "dozz_value": target, "z_score": zsc, "seed": params["seed"],
        "manifest_hash": est.manifest["hash"],
        "variance_ok": est.manifest["variance_ok"],
    }
    lines = [_summary_line("four-point", est.mean, est.stderr, est.n,
                           target, zsc)]
    if comparator_note:
        lines.append(comparator_note)
    return [record], lines, [est.manifest]


def _mc_moments(params: dict) -> tuple[list[dict], list[str], list[dict]]:
    grid = CylinderGrid.from_dict(params["grid"])
    cfg = MCConfig(params["samples"], grid, params["seed"], params["batch"])
    rep = moment_scaling_report(params["gamma"], params["alpha"],
                                params["p_list"], params["eps"], cfg,
                                workers=params["workers"])
    records, lines = [], []
    for row in rep.rows:
        z = ((row.slope - row.theory_slope) / row.slope_stderr
             if row.slope_stderr > 0 else math.inf)
        records.append({
            "quantity": "moments", "gamma": params["gamma"],
            "alpha": params["alpha"], "kind": row.kind, "p": row.p,
            "mean": row.slope, "stderr": row.slope_stderr,
            "n": params["samples"], "dozz_value": row.theory_slope,
            "z_score": z, "seed": params["seed"],
            "manifest_hash": rep.manifest["hash"],
        })
        lines.append(f"{row.kind} p={row.p:g}: slope {row.slope:.4f} "
                     f"+- {row.slope_stderr:.4f}  theory "
                     f"{row.theory_slope:.4f}  z={z:+.2f}")
    return records, lines, [rep.manifest]


_EXPERIMENTS = {
    "three-point": _mc_three_point,
    "reflection": _mc_reflection,
    "two-point-limit": _mc_two_point,
    "tail": _mc_tail,
    "four-point": _mc_four_point,
    "moments": _mc_moments,
}


def _resolve_mc_params(args) -> dict:
    """Turn parsed flags into the experiment's replayable parameter dict."""
    exp = args.experiment

    def need(flag: str, value):
        if value is None:
            raise BoundsError(f"mc {exp}: missing --{flag}")
        return value

    params: dict = {
        "experiment": exp,
        "gamma": args.gamma,
        "mu": args.mu,
        "samples": args.samples,
        "seed": args.seed,
        "batch": args.batch,
        "workers": args.workers,
    }
    grid_spec = dict(kv.split("=", 1) for kv in args.grid or [])
    grid_spec = {k.replace("-", "_"): float(v) for k, v in grid_spec.items()}

    if exp in ("three-point", "two-point-limit", "moments"):
        params["grid"] = _grid_from_spec(grid_spec, [(0.0, 0.0)]).as_dict()
    if exp == "three-point":
        params["alphas"] = list(need("alphas", args.alphas))
        params["unit_volume"] = args.unit_volume
    elif exp == "reflection":
        params["alpha"] = need("alpha", args.alpha)
        params["horizon"] = args.horizon
        params["z_spacing"] = args.z_spacing
    elif exp == "two-point-limit":
        params["alpha"] = need("alpha", args.alpha)
        params["alpha2"] = args.alpha2
        params["eps"] = list(need("eps", args.eps))
    elif exp == "tail":
        params["alpha"] = need("alpha", args.alpha)
        params["z"] = _jsonable(need("z", args.z))
        params["rbar"] = args.rbar
    elif exp == "four-point":
        z = need("z", args.z)
        params["z"] = _jsonable(z)
        params["alphas"] = list(need("alphas", args.alphas))
        params["alpha0"] = need("alpha0", args.alpha0)
        if grid_spec:
            anchors = [(0.0, 0.0), (-math.log(abs(z)),
                                    math.atan2(z.imag, z.real) % (2 * math.pi))]
            params["grid"] = _grid_from_spec(grid_spec, anchors).as_dict()
        else:
            params["grid"] = four_point_grid(z).as_dict()
    elif exp == "moments":
        params["alpha"] = args.alpha if args.alpha is not None else 0.0
        params["p_list"] = list(need("p-list", args.p_list))
        params["eps"] = list(need("eps", args.eps))
    return params


def _run_mc(params: dict, out_base: str, want_csv: bool) -> int:
    started = time.time()
    records, lines, est_manifests = _EXPERIMENTS[params["experiment"]](params)

    run_manifest = {
        "command": "mc " + params["experiment"],
        "params": params,
        "seed": params["seed"],
        "grid": params.get("grid"),
        "code_version": __version__,
        "estimator_hashes": [m["hash"] for m in est_manifests],
        "started_unix": round(started, 3),
        "finished_unix": round(time.time(), 3),
    }
    run_manifest["hash"] = _run_hash(run_manifest)

    jsonl_path = out_base + ".jsonl"
    with open(jsonl_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(_canonical({**rec, "run_hash": run_manifest["hash"]}) + "\n")
    with open(out_base + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(run_manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written = [jsonl_path, out_base + ".manifest.json"]

    if want_csv:
        columns = _MC_CSV_COLUMNS[params["experiment"]]
        csv_path = out_base + ".csv"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(",".join(columns) + "\n")
            for rec in records:
                fh.write(",".join(_csv_cell(rec.get(c)) for c in columns) + "\n")
        written.append(csv_path)

    for line in lines:
        print(line)
    print("wrote " + " ".join(written))

    if any(m.get("variance_ok") is False for m in est_manifests):
        print("warning: per-sample variance is infinite for these weights; "
              "stderr is unreliable (variance_ok=false in manifest)",
              file=sys.stderr)
        return 3
    return 0


def cmd_mc(args) -> int:
    if args.replay:
        with open(args.replay, encoding="utf-8") as fh:
            manifest = json.load(fh)
        params = manifest["params"]
        out_base = args.out or ("replay_" + params["experiment"])
    else:
        if args.experiment is None:
            return _fail(2, "mc: an experiment name or --replay is required")
        try:
            params = _resolve_mc_params(args)
        except _PRECONDITION_ERRORS as exc:
            return _fail(2, f"mc {args.experiment}: {exc}")
        out_base = args.out or ("mc_" + params["experiment"])
    try:
        return _run_mc(params, out_base, args.csv)
    except _PRECONDITION_ERRORS as exc:
        return _fail(2, f"mc {params['experiment']}: {exc}")
    except _NUMERICAL_ERRORS as exc:
        return _fail(3, f"mc {params['experiment']}: {exc}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liouville",
        description="Liouville structure constants: closed forms and "
                    "Monte Carlo estimators.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--gamma", type=float, default=1.0)
        sp.add_argument("--mu", type=float, default=1.0)
        sp.add_argument("--config", help="key = value file; flags win")

    p_eval = sub.add_parser("eval", help="evaluate an analytic quantity")
    p_eval.add_argument("quantity", choices=("dozz", "rdozz", "upsilon",
                                             "coefA", "coefB", "coefT",
                                             "coefTtilde"))
    common(p_eval)
    p_eval.add_argument("--alpha", type=float)
    p_eval.add_argument("--alphas", type=_parse_floats)
    p_eval.add_argument("--z", type=_parse_complex)
    p_eval.add_argument("--chi", type=float)
    p_eval.add_argument("--eps", type=float)
    p_eval.add_argument("--alpha-prime", type=float)
    p_eval.add_argument("--csv", action="store_true")
    p_eval.set_defaults(func=cmd_eval)

    p_check = sub.add_parser("check", help="run the identity suites")
    common(p_check)
    p_check.add_argument("--suite", choices=("specfun", "dozz", "all"),
                         default="all")
    p_check.add_argument("--points", type=int, default=50)
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--tol", type=float, default=1e-8)
    p_check.set_defaults(func=cmd_check)

    p_mc = sub.add_parser("mc", help="run a Monte Carlo experiment")
    p_mc.add_argument("experiment", nargs="?",
                      choices=tuple(_EXPERIMENTS))
    common(p_mc)
    p_mc.add_argument("--alpha", type=float)
    p_mc.add_argument("--alpha2", type=float)
    p_mc.add_argument("--alpha0", type=float)
    p_mc.add_argument("--alphas", type=_parse_floats)
    p_mc.add_argument("--z", type=_parse_complex)
    p_mc.add_argument("--eps", type=_parse_floats)
    p_mc.add_argument("--p-list", type=_parse_floats)
    p_mc.add_argument("--rbar", type=float)
    p_mc.add_argument("--unit-volume", action="store_true")
    p_mc.add_argument("--samples", type=int, default=1000)
    p_mc.add_argument("--seed", type=int, default=0)
    p_mc.add_argument("--batch", type=int, default=250)
    p_mc.add_argument("--workers", type=int, default=1)
    p_mc.add_argument("--horizon", type=float, default=30.0)
    p_mc.add_argument("--z-spacing", type=float, default=0.05)
    p_mc.add_argument("--grid", action="append", metavar="KEY=VAL",
                      help="half_width, cells_per_unit, n_modes, n_theta, "
                           "levels (repeatable)")
    p_mc.add_argument("--out", help="output basename (default mc_<experiment>)")
    p_mc.add_argument("--csv", action="store_true",
                      help="also write <out>.csv")
    p_mc.add_argument("--replay", metavar="MANIFEST",
                      help="rerun a previous experiment from its manifest")
    p_mc.set_defaults(func=cmd_mc)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and not argv[0].startswith("-"):
        # config splicing only applies inside a subcommand's flags
        argv = argv[:1] + _splice_config(argv[1:])
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _PRECONDITION_ERRORS as exc:
        return _fail(2, f"{args.command}: {exc}")
    except _NUMERICAL_ERRORS as exc:
        return _fail(3, f"{args.command}: {exc}")
    except LiouvilleError as exc:
        return _fail(3, f"{args.command}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
