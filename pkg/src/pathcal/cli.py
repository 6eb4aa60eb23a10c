"""Command-line front end: ``pathcal {models,calibrate,predict,compare,decompose,synth}``."""

from __future__ import annotations

import argparse
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import METHODS, QMM, SVD, calibrate, decompose, predict_many
from .dataio import (build_report, emit_profile, load_measurements, load_model, load_report,
                     load_scenario, save_measurements, save_model, save_report, synth_generate)
from .errors import PathcalError, RampOffGridWarning, SingularGram
from .metrics import GrgConfig
from .registry import builtin_models, get_model


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what} must be comma-separated numbers, got {text!r}") from None


def _coeffs(text):
    return _parse_floats(text, "--coeffs")


def _distances(text):
    """Comma list of meters, or ``start:stop:count`` for an evenly spaced route."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("--distances range must be start:stop:count")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad --distances range {text!r}") from None
        return np.linspace(start, stop, count).tolist()
    return _parse_floats(text, "--distances")


def _resolve_models(spec: str):
    out = []
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        if item.endswith(".json") or Path(item).is_file():
            out.append(load_model(item))
        else:
            out.append(get_model(item))
    if not out:
        raise PathcalError("no model given")
    return out


def _methods(choice: str) -> list[str]:
    return list(METHODS) if choice == "both" else [choice]


def _grg(args) -> GrgConfig:
    return GrgConfig(args.xi, args.sigma, args.beta)


def _run_calibrations(models, methods, data, cfg):
    jobs = [(m, meth) for m in models for meth in methods]

    def one(job):
        m, meth = job
        try:
            result = calibrate(m, data, meth)
        except SingularGram as exc:
            raise SingularGram(f"model {m.name!r}: {exc}; try --method svd", exc.condition) from None
        return build_report(m, result, data, cfg)

    with ThreadPoolExecutor() as pool:
        return list(pool.map(one, jobs))


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _print_report(r, out):
    print(f"model {r.model.name} ({r.model.variant}), method {r.method}, N = {r.model.n}", file=out)
    for label, c in zip(r.model.labels, r.coefficients):
        print(f"  {label:<40s} {_fmt(c)}", file=out)
    print(f"  rank {r.rank}, condition {r.condition_estimate:.6g}, residual {r.residual_seminorm:.6g} dB",
          file=out)
    grg = "n/a" if r.grg is None else f"{r.grg.rho_grg_mape:.6f}"
    print(f"  MPE {r.mpe:.6f} dB, RMSE {r.rmse:.6f} dB, GRG-MAPE {grg}", file=out)
    for w in r.warnings:
        print(f"  warning: {w}", file=out)


def cmd_models(args, out):
    models = builtin_models() if args.model is None else _resolve_models(args.model)
    if args.out:
        if len(models) != 1:
            raise PathcalError("--out needs exactly one --model")
        save_model(models[0], args.out)
    for m in models:
        ramps = "yes" if m.has_ramps else "no"
        print(f"{m.name:<14s} {m.variant:<12s} N={m.n:<3d} ramps={ramps:<4s} {m.description}", file=out)
        if args.model is not None:
            for b in m.basis:
                print(f"    {b.label}: {b.describe()}", file=out)
    return 0


def cmd_calibrate(args, out):
    data = load_measurements(args.data, args.scenario)
    reports = _run_calibrations(_resolve_models(args.model), _methods(args.method), data, _grg(args))
    for r in reports:
        _print_report(r, out)
    if args.out:
        save_report(reports, args.out)
    if args.profile_out:
        emit_profile(reports, args.profile_out)
    return 0


def cmd_compare(args, out):
    data = load_measurements(args.data, args.scenario)
    models = _resolve_models(args.model)
    reports = _run_calibrations(models, [QMM, SVD], data, _grg(args))
    for i, m in enumerate(models):
        q, s = reports[2 * i], reports[2 * i + 1]
        print(f"model {m.name} ({m.variant}), N = {m.n}, M = {data.m}", file=out)
        print(f"  {'basis':<40s} {'QMM':>18s} {'SVD':>18s} {'delta':>12s}", file=out)
        for label, a, b in zip(m.labels, q.coefficients, s.coefficients):
            print(f"  {label:<40s} {_fmt(a):>18s} {_fmt(b):>18s} {a - b:12.3e}", file=out)
        print(f"  {'RMSE (dB)':<40s} {q.rmse:18.10f} {s.rmse:18.10f} {q.rmse - s.rmse:12.3e}", file=out)
        print(f"  {'MPE (dB)':<40s} {q.mpe:18.10f} {s.mpe:18.10f} {q.mpe - s.mpe:12.3e}", file=out)
        if q.grg is not None and s.grg is not None:
            a, b = q.grg.rho_grg_mape, s.grg.rho_grg_mape
            print(f"  {'GRG-MAPE':<40s} {a:18.10f} {b:18.10f} {a - b:12.3e}", file=out)
        print(f"  {'condition':<40s} {q.condition_estimate:18.6g} {s.condition_estimate:18.6g}", file=out)
        for r in (q, s):
            for w in r.warnings:
                print(f"  warning ({r.method}): {w}", file=out)
    if args.out:
        save_report(reports, args.out)
    if args.profile_out:
        emit_profile(reports, args.profile_out)
    return 0


def cmd_decompose(args, out):
    data = load_measurements(args.data, args.scenario)
    (m,) = _resolve_models(args.model)
    result = calibrate(m, data, args.method)
    dec = decompose(m, result, data)
    header = ["distance_m", "net_db"] + [f"{lbl} [dB]" for lbl in dec.labels] + [f"{lbl} [%]" for lbl in dec.labels]
    lines = [",".join(header)]
    for k in range(data.m):
        row = [dec.distances[k], dec.net[k], *dec.contributions[k], *dec.percent[k]]
        lines.append(",".join(f"{v:.10g}" for v in row))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    for w in dec.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_synth(args, out):
    (m,) = _resolve_models(args.model)
    scenario = load_scenario(args.scenario)
    coeffs = args.coeffs if args.coeffs is not None else [1.0] * m.n
    data = synth_generate(m, coeffs, scenario, args.distances, args.noise, args.seed)
    save_measurements(data, args.out)
    print(f"wrote {data.m} samples of {m.name} to {args.out}", file=out)
    return 0


def cmd_predict(args, out):
    reports = load_report(args.report)
    if args.model:
        (m,) = _resolve_models(args.model)
        reports = [r for r in reports if r.model.name == m.name]
    if args.method:
        reports = [r for r in reports if r.method == args.method]
    if not reports:
        raise PathcalError(f"no matching calibration in {args.report}")
    r = reports[0]
    d = np.asarray(args.distances, dtype=float)
    # distances that lie on the calibration route reuse that sample's index
    on_grid = {float(x): k + 1 for k, x in enumerate(r.distances)}
    idx = np.array([on_grid.get(float(x), 0) for x in d])
    values = np.empty(d.size)
    grid = idx > 0
    if grid.any():
        values[grid] = predict_many(r.model, r.coefficients, d[grid], r.scenario, idx[grid])
    if (~grid).any():
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RampOffGridWarning)
            values[~grid] = predict_many(r.model, r.coefficients, d[~grid], r.scenario)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    print("distance_m,predicted_db,on_grid", file=out)
    for x, v, g in zip(d, values, grid):
        print(f"{x:.10g},{v:.10g},{int(g)}", file=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pathcal", description="Pathloss model calibration (QMM and SVD).")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def grg_flags(sp):
        sp.add_argument("--xi", type=float, default=0.5, help="GRG distinguishing coefficient")
        sp.add_argument("--sigma", type=float, default=0.1, help="GRG weight")
        sp.add_argument("--beta", type=float, default=0.9, help="MAPE weight")

    def data_flags(sp):
        sp.add_argument("--data", required=True, help="measurement CSV (distance_m,pathloss_db)")
        sp.add_argument("--scenario", required=True, help="scenario TOML/JSON")

    sp = sub.add_parser("models", help="list builtin models")
    sp.add_argument("--model", help="show basis functions of these models")
    sp.add_argument("--out", help="write the model config (JSON) of a single --model")
    sp.set_defaults(func=cmd_models)

    sp = sub.add_parser("calibrate", help="calibrate models against measurements")
    sp.add_argument("--model", required=True, help="model name(s), comma-separated, or model JSON file")
    sp.add_argument("--method", choices=[QMM, SVD, "both"], default=QMM)
    data_flags(sp)
    sp.add_argument("--out", help="report JSON")
    sp.add_argument("--profile-out", help="profile CSV")
    grg_flags(sp)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("compare", help="calibrate with both QMM and SVD and report the differences")
    sp.add_argument("--model", required=True)
    data_flags(sp)
    sp.add_argument("--out", help="report JSON")
    sp.add_argument("--profile-out", help="profile CSV")
    grg_flags(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("decompose", help="per-component contributions to the fitted pathloss")
    sp.add_argument("--model", required=True)
    sp.add_argument("--method", choices=[QMM, SVD], default=QMM)
    data_flags(sp)
    sp.add_argument("--out", help="contribution table CSV (default stdout)")
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("synth", help="generate a synthetic measurement file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--coeffs", type=_coeffs, help="true coefficients, comma-separated (default all 1)")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--distances", type=_distances, required=True, help="meters: a,b,c or start:stop:count")
    sp.add_argument("--noise", type=float, default=0.0, help="noise standard deviation (dB)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="measurement CSV to write")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("predict", help="predict pathloss from a saved report")
    sp.add_argument("--report", required=True)
    sp.add_argument("--distances", type=_distances, required=True)
    sp.add_argument("--model", help="select a calibration by model name")
    sp.add_argument("--method", choices=[QMM, SVD], help="select a calibration by method")
    sp.set_defaults(func=cmd_predict)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (PathcalError, OSError, ValueError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"pathcal: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
