"""Command-line experiment driver.

``xxzkink <experiment> [--config FILE] [--key value]... [--out PATH]
[--format csv|json] [--seed N] [--plotdata PATH]``

Configuration files are flat ``key=value`` text; command-line ``--key
value`` pairs override them.  Values are parsed as integers, floats,
booleans, integer ranges ``a..b`` or comma-separated lists.  Floats are
written with ``repr`` (shortest round-trip form), so identical inputs give
byte-identical artifacts.

Exit status: 0 when every declared tolerance holds, 1 on a tolerance
failure, 2 on a usage or parameter error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import XXZKinkError

EXPERIMENTS = (
    "ground-state",
    "gap-scan",
    "scaling",
    "correction",
    "graphs",
    "iterated-integral",
    "stark-spectrum",
    "kernel-check",
    "profile",
    "profile-limit",
    "transverse",
    "zd-spectrum",
)

PLOT_SCHEMAS = {
    "ground-state": "L,delta,kernel_dim,max_residual,idempotency",
    "gap-scan": "L,gap",
    "scaling": "lambda,error,bound",
    "correction": "lambda,leading_error,corrected_error,ratio",
    "graphs": "n,count",
    "iterated-integral": "n,closed_form,quadrature,relative_error",
    "stark-spectrum": "m,eigenvalue,residual",
    "kernel-check": "t,kernel_error,unitarity,periodicity",
    "profile": "t,x,value,component",
    "profile-limit": "v,m3_extrapolated,kappa_fit_local",
    "transverse": "v,t,psi_prime",
    "zd-spectrum": "node,weight",
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# config

def parse_value(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if ".." in text:
        lo, hi = text.split("..", 1)
        try:
            return list(range(int(lo), int(hi) + 1))
        except ValueError:
            raise UsageError(f"bad integer range {text!r}") from None
    if "," in text:
        return [parse_value(p) for p in text.split(",") if p.strip()]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = parse_value(value)
    return out


def serialize_config(params: dict) -> str:
    return "".join(f"{k}={format_value(params[k])}\n" for k in sorted(params))


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _floats(value) -> list[float]:
    return [float(v) for v in _as_list(value)]


def _vector(value, n=3) -> tuple:
    vals = _floats(value)
    if len(vals) != n:
        raise UsageError(f"expected {n} components, got {value!r}")
    return tuple(vals)


# ---------------------------------------------------------------------------
# outputs

def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def csv_text(header: str, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header.split(","))
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def emit_plotdata(experiment: str, rows, path) -> Path:
    """Write long-format CSV with the documented column schema (header only if empty)."""
    path = Path(path)
    path.write_text(csv_text(PLOT_SCHEMAS[experiment], rows or []), encoding="utf-8", newline="\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


@dataclass
class Outcome:
    passed: bool
    summary: dict
    header: str
    rows: list
    payload: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)  # suffix -> csv text


# ---------------------------------------------------------------------------
# experiments

def _ground_state(p, seed):
    from .xxz_core import ground_space_check

    tol = float(p.get("tol", 1e-10))
    rows = []
    for delta in _floats(p.get("delta", [1.5, 2.0, 4.0])):
        for L in _as_list(p.get("L", list(range(2, 13)))):
            r = ground_space_check(int(L), delta)
            rows.append((r["L"], r["delta"], r["kernel_dim"], r["max_residual"], r["idempotency"]))
    ok = all(k == L + 1 and res <= tol and idem <= tol for L, _, k, res, idem in rows)
    worst = max(max(r[3], r[4]) for r in rows)
    return Outcome(ok, {"chains": len(rows), "worst_defect": worst}, PLOT_SCHEMAS["ground-state"], rows)


def _gap_scan(p, seed):
    from .xxz_core import gap_scan, richardson_extrapolate

    delta = float(p.get("delta", 2.0))
    sizes = [int(L) for L in _as_list(p.get("L", list(range(4, 13))))]
    rows = gap_scan(delta, sizes)
    limit = richardson_extrapolate(*zip(*rows))
    target = 1.0 - 1.0 / delta
    rel = abs(limit - target) / target
    ok = all(g > 0 for _, g in rows) and rel <= float(p.get("rel_tol", 0.05))
    return Outcome(ok, {"extrapolated_gap": limit, "target": target, "relative_deviation": rel},
                   PLOT_SCHEMAS["gap-scan"], rows, {"gaps": rows, "extrapolated": limit, "target": target})


def _dynamics_setup(p):
    from .perturbation_dynamics import FieldSpec
    from .xxz_core import ChainSpec, kink_ground_family

    chain = ChainSpec.centered(int(p.get("L", 6)), float(p.get("delta", 2.0)))
    field = FieldSpec.single_site(chain, int(p.get("site", 0)), _vector(p.get("B", [1.0, 0.0, 0.5])))
    m = float(p.get("m", 0.0))
    return chain, field, kink_ground_family(chain).state(m)


def _scaling(p, seed):
    from .perturbation_dynamics import scaling_experiment

    chain, field, phi = _dynamics_setup(p)
    rep = scaling_experiment(chain, field, phi, float(p.get("tau", 1.0)),
                             _floats(p.get("lambda", [0.2, 0.1, 0.05, 0.025])),
                             delta=float(p.get("slack", 0.25)), tol=float(p.get("tol", 1e-10)))
    return Outcome(rep.passes, {"slope": rep.fitted_slope, "threshold": rep.threshold, "monotone": rep.monotone},
                   PLOT_SCHEMAS["scaling"], rep.plot_rows(), rep.to_dict())


def _correction(p, seed):
    from .perturbation_dynamics import correction_experiment

    chain, field, phi = _dynamics_setup(p)
    lams = _floats(p.get("lambda", [0.2, 0.15, 0.1, 0.07, 0.05, 0.035, 0.02]))
    rep = correction_experiment(chain, field, phi, float(p.get("tau", 1.0)), lams,
                                reading=str(p.get("reading", "derived")))
    rows = list(zip(rep.lambda_values, rep.leading_errors, rep.corrected_errors, rep.ratios))
    ok = rep.improves_everywhere and rep.ratio_decreasing_with_lambda
    return Outcome(ok, {"improves": rep.improves_everywhere, "ratio_monotone": rep.ratio_decreasing_with_lambda,
                        "max_ratio": max(rep.ratios)}, PLOT_SCHEMAS["correction"], rows, rep.to_dict())


def _graphs(p, seed):
    from .graphs import enumerate_graphs

    ns = [int(n) for n in _as_list(p.get("n", list(range(1, 13))))]
    rows = [(n, len(enumerate_graphs(n))) for n in ns]
    ok = all(c == 2 ** (n - 1) for n, c in rows) and enumerate_graphs(1)[0].sign == 1
    return Outcome(ok, {"max_n": max(ns)}, PLOT_SCHEMAS["graphs"], rows, {"n": ns, "counts": [c for _, c in rows]})


def _iterated_integral(p, seed):
    from .errors import SingularityError
    from .graphs import iterated_integral_closed_form, iterated_integral_quadrature

    if seed is None:
        raise UsageError("iterated-integral draws random instances; --seed is required")
    rng = np.random.default_rng(seed)
    samples, n_max = int(p.get("samples", 50)), int(p.get("n_max", 4))
    tol = float(p.get("tol", 1e-6))
    rows = []
    while len(rows) < samples:
        n = int(rng.integers(1, n_max + 1))
        E = rng.uniform(-2, 2, n + 1)
        k = rng.uniform(-2, 2, n) + 1j * rng.uniform(-2, 2, n)
        lam, t = rng.uniform(0.05, 1.0), rng.uniform(0.1, 3.0)
        try:
            closed = iterated_integral_closed_form(E, k, lam, t)
        except SingularityError:
            continue
        quad = iterated_integral_quadrature(E, k, lam, t)
        rows.append((n, repr(closed), repr(quad), abs(closed - quad) / abs(quad)))
    worst = max(r[3] for r in rows)
    return Outcome(worst <= tol, {"samples": samples, "max_relative_error": worst},
                   PLOT_SCHEMAS["iterated-integral"], rows)


def _stark_spectrum(p, seed):
    from .stark_jacobi import StarkJacobiParams, build_k0_truncated, eigenfunction_vector, truncation_radius

    params = StarkJacobiParams(float(p.get("alpha", 1.0)), float(p.get("gamma", 0.5)))
    R = int(p.get("R", truncation_radius(params)))
    K = build_k0_truncated(params, R)
    rows = []
    for m in range(-int(p.get("m_max", 3)), int(p.get("m_max", 3)) + 1):
        v = eigenfunction_vector(m, params, R)
        rows.append((m, params.gamma * m, float(np.linalg.norm(K @ v - params.gamma * m * v))))
    worst = max(r[2] for r in rows)
    return Outcome(worst <= float(p.get("tol", 1e-9)), {"max_residual": worst, "R": R},
                   PLOT_SCHEMAS["stark-spectrum"], rows)


def _kernel_check(p, seed):
    from scipy.linalg import expm

    from .stark_jacobi import StarkJacobiParams, build_k0_truncated, kernel_column

    params = StarkJacobiParams(float(p.get("alpha", 1.0)), float(p.get("gamma", 0.5)))
    n = int(p.get("n", 0))
    ts = _floats(p.get("t", [0.0, 1.0, 5.0, 10.0, 20.0]))
    R = int(p.get("R", math.ceil(4 * abs(params.alpha / params.gamma)) + 80))
    K = build_k0_truncated(params, R).toarray()
    rows = []
    for t in ts:
        col = kernel_column(n, t, params, R)
        err = float(np.abs(expm(-1j * t * K)[:, R + n] - col).max())
        unit = abs(float(np.sum(np.abs(col) ** 2)) - 1.0)
        later = kernel_column(n, t + params.period, params, R)
        per = float(np.abs(np.abs(later) - np.abs(col)).max())
        rows.append((t, err, unit, per))
    ok = all(e <= 1e-8 and u <= 1e-10 and q <= 1e-10 for _, e, u, q in rows)
    return Outcome(ok, {"max_kernel_error": max(r[1] for r in rows)}, PLOT_SCHEMAS["kernel-check"], rows)


def _profile(p, seed):
    from .interface_motion import UniformField3, snapshot

    alpha, gamma, q = float(p.get("alpha", 1.0)), float(p.get("gamma", 0.5)), float(p.get("q", 0.5))
    f = UniformField3.from_alpha(alpha, gamma, q, theta=float(p.get("theta", 0.0)))
    xs = _as_list(p.get("x", list(range(-20, 21))))
    lo, hi = int(min(xs)), int(max(xs))
    comp = str(p.get("component", "z"))
    snaps = [snapshot(f, t, lo, hi, comp) for t in _floats(p.get("t", [0.0, 3.14, 6.28]))]
    rows = [row for s in snaps for row in s.rows()]
    ok = all(s.tail_bound <= 1e-10 for s in snaps)
    if comp == "z":
        ok = ok and all(np.all(np.abs(s.values) <= 0.5) for s in snaps)
    period_dev = 0.0
    if gamma != 0:
        per = f.params.period
        for a in snaps:
            for b in snaps:
                k = (b.t - a.t) / per
                if b.t > a.t and abs(k - round(k)) <= 1e-9 and round(k) >= 1:
                    period_dev = max(period_dev, float(np.abs(a.values - b.values).max()))
        ok = ok and period_dev <= 1e-10
    extra = {f"_t{i}": s.to_csv() for i, s in enumerate(snaps)}
    return Outcome(ok, {"snapshots": len(snaps), "periodicity_deviation": period_dev},
                   PLOT_SCHEMAS["profile"], rows, extra=extra)


def _profile_limit(p, seed):
    from .interface_motion import profile_limit_fit

    t_list = p.get("t")
    v_grid = p.get("v")
    rep = profile_limit_fit(float(p.get("alpha", 1.0)), float(p.get("q", 0.5)),
                            None if t_list is None else _floats(t_list),
                            None if v_grid is None else _floats(v_grid), int(p.get("phases", 8)))
    selected = rep.kappa_selected
    ok = (selected is not None and rep.continuity_choice == selected
          and rep.plateau_residual <= float(p.get("plateau_tol", 1e-3)))
    rows = [(r["v"], r["m3_extrapolated"], r["kappa_fit_local"]) for r in rep.per_v_table()]
    return Outcome(ok, {"kappa_fit": rep.kappa_fit, "kappa_selected": selected,
                        "continuity_residual": rep.continuity_residual, "plateau_residual": rep.plateau_residual},
                   PLOT_SCHEMAS["profile-limit"], rows, rep.to_dict())


def _transverse(p, seed):
    from .interface_motion import transverse_spread_check

    alpha = float(p.get("alpha", 1.0))
    ts = _floats(p.get("t", [c / alpha for c in (25, 50, 100, 200, 400)]))
    rep = transverse_spread_check(_floats(p.get("v", [0.5, 1.0, 1.5])), alpha, float(p.get("q", 0.5)), ts)
    ok = rep.decays_along_rays and rep.min_r_squared >= float(p.get("r2_min", 0.99)) and math.isfinite(rep.length_spread)
    rows = [(float(v), t, val) for v, vals in rep.psi_prime.items() for t, val in zip(rep.t_list, vals)]
    return Outcome(ok, {"decays_along_rays": rep.decays_along_rays, "min_r_squared": rep.min_r_squared},
                   PLOT_SCHEMAS["transverse"], rows, rep.to_dict())


def _zd_spectrum(p, seed):
    from .stark_jacobi import ZdFieldVector, lattice_distance, zd_spectral_measure, zd_spectrum

    fv = ZdFieldVector(tuple(_floats(p.get("gamma", [1.0, 2.0]))), alpha=float(p.get("alpha", 1.0)))
    desc = zd_spectrum(fv)
    payload = desc.to_dict()
    rows, ok, summary = [], True, {"kind": desc.kind}
    if desc.kind == "pure-point-lattice" and fv.d <= 3:
        nodes, weights = zd_spectral_measure(fv, int(p.get("R", 40)))
        keep = weights > 1e-8
        dist = lattice_distance(nodes[keep], desc.generators["step"])
        rows = list(zip(nodes.tolist(), weights.tolist()))
        ok = dist <= float(p.get("tol", 1e-6))
        summary["lattice_distance"] = dist
        payload["lattice_distance"] = dist
    return Outcome(ok, summary, PLOT_SCHEMAS["zd-spectrum"], rows, payload)


RUNNERS = {
    "ground-state": _ground_state,
    "gap-scan": _gap_scan,
    "scaling": _scaling,
    "correction": _correction,
    "graphs": _graphs,
    "iterated-integral": _iterated_integral,
    "stark-spectrum": _stark_spectrum,
    "kernel-check": _kernel_check,
    "profile": _profile,
    "profile-limit": _profile_limit,
    "transverse": _transverse,
    "zd-spectrum": _zd_spectrum,
}


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    epilog = "plot-data columns:\n" + "\n".join(f"  {k:18s} {v}" for k, v in PLOT_SCHEMAS.items())
    parser = argparse.ArgumentParser(
        prog="xxzkink",
        description="Run a kink-dynamics experiment and write its artifact.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", type=Path, help="flat key=value parameter file")
    parser.add_argument("--out", type=Path, help="artifact path (stdout when omitted)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--seed", type=int, help="seed for randomized checks")
    parser.add_argument("--plotdata", type=Path, help="also write long-format plot CSV here")
    return parser


def _overrides(tokens: list[str]) -> dict:
    out = {}
    it = iter(tokens)
    for tok in it:
        if not tok.startswith("--"):
            raise UsageError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            value = next(it, None)
            if value is None:
                raise UsageError(f"missing value for --{key}")
        out[key.replace("-", "_")] = parse_value(value)
    return out


def run(experiment: str, params: dict, seed: int | None = None) -> Outcome:
    return RUNNERS[experiment](params, seed)


def render(outcome: Outcome, experiment: str, params: dict, fmt: str, seed) -> str:
    if fmt == "csv":
        return csv_text(outcome.header, outcome.rows)
    doc = {"experiment": experiment, "parameters": params, "seed": seed, "passed": outcome.passed,
           "summary": outcome.summary, "result": outcome.payload or {"columns": outcome.header.split(","),
                                                                      "rows": outcome.rows}}
    return json.dumps(_jsonable(doc), sort_keys=True, indent=1) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    try:
        params = parse_config(args.config.read_text(encoding="utf-8")) if args.config else {}
        params.update(_overrides(rest))
        outcome = run(args.experiment, params, args.seed)
    except (UsageError, XXZKinkError, ValueError, OSError) as exc:
        print(f"xxzkink: error: {exc}", file=sys.stderr)
        return 2
    text = render(outcome, args.experiment, params, args.format, args.seed)
    if args.out:
        args.out.write_text(text, encoding="utf-8", newline="\n")
        for suffix, body in outcome.extra.items():
            args.out.with_name(f"{args.out.stem}{suffix}.csv").write_text(body, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    if args.plotdata:
        emit_plotdata(args.experiment, outcome.rows, args.plotdata)
    status = "pass" if outcome.passed else "FAIL"
    details = " ".join(f"{k}={_cell(v) if not isinstance(v, bool) else v}" for k, v in outcome.summary.items())
    print(f"{args.experiment}: {status} {details}")
    return 0 if outcome.passed else 1


if __name__ == "__main__":
    sys.exit(main())
