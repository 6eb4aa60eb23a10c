"""
Measurement ingestion, synthetic fixtures, and report/profile persistence.

File formats
------------
measurements  CSV, UTF-8, header ``distance_m,pathloss_db``; row order is the sample index.
scenario      TOML (or JSON when the suffix is ``.json``) with ``frequency_mhz``,
              ``tx_height_m`` and ``rx_height_m``.
model         JSON, see :func:`pathcal.registry.to_config`.
report        JSON ``{"format": ..., "calibrations": [...]}``.  Floats are written with
              ``repr`` precision so they round-trip exactly; non-finite values use the
              ``NaN``/``Infinity`` tokens of Python's json module.
profile       CSV ``distance_m,measured_db,<model>:<method>,...``.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calibration import CalibrationResult, MeasurementSet, decompose, fitted
from .errors import DataError, DegenerateRange, ZeroMeasurement
from .metrics import GrgConfig, GrgReport, grg_mape, mpe, rmse
from .registry import ModelSpec, Scenario, from_config, to_config

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

REPORT_FORMAT = "pathcal-report/1"
SCENARIO_KEYS = ("frequency_mhz", "tx_height_m", "rx_height_m")
MEASUREMENT_COLUMNS = ("distance_m", "pathloss_db")


# --- scenario / measurements ----------------------------------------------

def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read scenario file {path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text) if path.suffix.lower() == ".json" else tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise DataError(f"cannot parse scenario file {path}: {exc}") from None
    return scenario_from_dict(cfg, source=str(path))


def scenario_from_dict(cfg: dict, source: str = "scenario") -> Scenario:
    missing = [k for k in SCENARIO_KEYS if k not in cfg]
    if missing:
        raise DataError(f"{source}: missing scenario key(s) {', '.join(missing)}")
    try:
        values = [float(cfg[k]) for k in SCENARIO_KEYS]
    except (TypeError, ValueError):
        raise DataError(f"{source}: scenario values must be positive reals") from None
    return Scenario(*values)


def scenario_to_dict(s: Scenario) -> dict:
    return {"frequency_mhz": s.frequency, "tx_height_m": s.tx_height, "rx_height_m": s.rx_height}


def save_scenario(s: Scenario, path) -> None:
    lines = [f"{k} = {v!r}" for k, v in scenario_to_dict(s).items()]
    _write_text(path, "\n".join(lines) + "\n")


def load_measurements(path, scenario_path) -> MeasurementSet:
    """
    Read a measurement CSV and its scenario sidecar.

    Errors name the 1-based data row (the header is not counted).
    """
    scenario = load_scenario(scenario_path)
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise DataError(f"{path}: empty measurement file")
            header = [h.strip() for h in header]
            for col in MEASUREMENT_COLUMNS:
                if col not in header:
                    raise DataError(f"{path}: missing column {col!r} (header: {','.join(header)})")
            i_d, i_p = (header.index(c) for c in MEASUREMENT_COLUMNS)
            distances, losses = [], []
            for row_no, row in enumerate(reader, start=1):
                if not row or all(not c.strip() for c in row):
                    continue
                try:
                    d = float(row[i_d])
                    p = float(row[i_p])
                except IndexError:
                    raise DataError(f"{path}: row {row_no} has too few cells") from None
                except ValueError:
                    raise DataError(f"{path}: non-numeric cell in row {row_no}: {','.join(row)}") from None
                if not d > 0:
                    raise DataError(f"{path}: non-positive distance in row {row_no}: {d!r}")
                if not math.isfinite(p):
                    raise DataError(f"{path}: non-finite pathloss in row {row_no}")
                distances.append(d)
                losses.append(p)
    except OSError as exc:
        raise DataError(f"cannot read measurement file {path}: {exc.strerror}") from None
    if not distances:
        raise DataError(f"{path}: no measurement rows")
    return MeasurementSet(np.array(distances), np.array(losses), scenario)


def save_measurements(data: MeasurementSet, path) -> None:
    rows = [",".join(MEASUREMENT_COLUMNS)]
    rows += [f"{d!r},{p!r}" for d, p in data.samples]
    _write_text(path, "\n".join(rows) + "\n")


# --- synthetic fixtures ----------------------------------------------------

def gaussian_noise(size: int, sd: float, seed: int) -> np.ndarray:
    """
    Seeded Box-Muller normals.

    Uniforms come from numpy's PCG64 bit generator seeded with ``seed``;
    pair ``i`` uses ``u1 = 1 - U[2i]`` and ``u2 = U[2i+1]`` to give
    ``r cos(t), r sin(t)`` with ``r = sqrt(-2 ln u1)``, ``t = 2 pi u2``.
    """
    if sd < 0:
        raise ValueError(f"noise standard deviation must be non-negative, got {sd!r}")
    pairs = (size + 1) // 2
    u = np.random.Generator(np.random.PCG64(seed)).random(2 * pairs)
    r = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))
    t = 2.0 * np.pi * u[1::2]
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(t)
    z[1::2] = r * np.sin(t)
    return sd * z[:size]


def synth_generate(m: ModelSpec, true_coeffs, s: Scenario, distances, noise_sd: float = 0.0,
                   seed: int = 0) -> MeasurementSet:
    """Synthetic measurements ``sum_j c_j phi_j(d_k, k) + N(0, noise_sd)`` along an ordered route."""
    d = np.asarray(distances, dtype=float).reshape(-1)
    if d.size == 0:
        raise DataError("distance grid is empty")
    coeffs = np.asarray(true_coeffs, dtype=float)
    if coeffs.shape != (m.n,):
        raise DataError(f"model {m.name!r} needs {m.n} coefficients, got {coeffs.size}")
    idx = np.arange(1, d.size + 1)
    clean = np.zeros(d.size)
    for c, b in zip(coeffs, m.basis):
        clean = clean + c * b.values(d, s, idx)
    noise = gaussian_noise(d.size, noise_sd, seed) if noise_sd > 0 else 0.0
    return MeasurementSet(d, clean + noise, s)


# --- reports ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CalibrationReport:
    model: ModelSpec
    scenario: Scenario
    method: str
    coefficients: np.ndarray
    residual_seminorm: float
    condition_estimate: float
    rank: int
    warnings: tuple[str, ...]
    mpe: float
    rmse: float
    grg: GrgReport | None
    distances: np.ndarray
    measured: np.ndarray
    predicted: np.ndarray
    contributions: np.ndarray
    percent: np.ndarray
    grg_config: GrgConfig = field(default_factory=GrgConfig)

    @property
    def column(self) -> str:
        return f"{self.model.name}:{self.method}"

    def to_dict(self) -> dict:
        return {
            "model": to_config(self.model),
            "scenario": scenario_to_dict(self.scenario),
            "method": self.method,
            "coefficients": self.coefficients.tolist(),
            "residual_seminorm": self.residual_seminorm,
            "condition_estimate": self.condition_estimate,
            "rank": self.rank,
            "warnings": list(self.warnings),
            "metrics": {
                "mpe": self.mpe,
                "rmse": self.rmse,
                "grg_config": {"xi": self.grg_config.xi, "sigma": self.grg_config.sigma,
                               "beta": self.grg_config.beta},
                "grg": None if self.grg is None else self.grg.to_dict(),
            },
            "samples": {
                "distance_m": self.distances.tolist(),
                "measured_db": self.measured.tolist(),
                "predicted_db": self.predicted.tolist(),
                "labels": self.model.labels,
                "contribution_db": self.contributions.tolist(),
                "contribution_pct": self.percent.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationReport":
        try:
            metrics = d["metrics"]
            samples = d["samples"]
            n = len(d["coefficients"])
            return cls(
                model=from_config(d["model"]),
                scenario=scenario_from_dict(d["scenario"], "report scenario"),
                method=d["method"],
                coefficients=np.array(d["coefficients"], dtype=float),
                residual_seminorm=float(d["residual_seminorm"]),
                condition_estimate=float(d["condition_estimate"]),
                rank=int(d["rank"]),
                warnings=tuple(d["warnings"]),
                mpe=float(metrics["mpe"]),
                rmse=float(metrics["rmse"]),
                grg=None if metrics.get("grg") is None else GrgReport.from_dict(metrics["grg"]),
                distances=np.array(samples["distance_m"], dtype=float),
                measured=np.array(samples["measured_db"], dtype=float),
                predicted=np.array(samples["predicted_db"], dtype=float),
                contributions=np.array(samples["contribution_db"], dtype=float).reshape(-1, n),
                percent=np.array(samples["contribution_pct"], dtype=float).reshape(-1, n),
                grg_config=GrgConfig(**metrics.get("grg_config", {})),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed report: {exc!r}") from None


def build_report(m: ModelSpec, result: CalibrationResult, data: MeasurementSet,
                 cfg: GrgConfig | None = None) -> CalibrationReport:
    cfg = cfg or GrgConfig()
    pred = fitted(m, result, data)
    notes = list(result.warnings)
    try:
        grg = grg_mape(data.pathloss, pred, cfg)
    except (DegenerateRange, ZeroMeasurement, DataError) as exc:
        grg = None
        notes.append(f"GrgUnavailable: {exc}")
    dec = decompose(m, result, data)
    notes.extend(dec.warnings)
    return CalibrationReport(
        model=m, scenario=data.scenario, method=result.method,
        coefficients=np.array(result.coefficients, dtype=float),
        residual_seminorm=result.residual_seminorm, condition_estimate=result.condition_estimate,
        rank=result.rank, warnings=tuple(notes),
        mpe=mpe(data.pathloss, pred), rmse=rmse(data.pathloss, pred), grg=grg,
        distances=np.array(data.distances), measured=np.array(data.pathloss), predicted=pred,
        contributions=dec.contributions, percent=dec.percent, grg_config=cfg,
    )


def save_report(reports, path) -> None:
    """Write one report or a sequence of reports to a single JSON file."""
    if isinstance(reports, CalibrationReport):
        reports = [reports]
    doc = {"format": REPORT_FORMAT, "calibrations": [r.to_dict() for r in reports]}
    _write_text(path, json.dumps(doc, indent=2) + "\n")


def load_report(path) -> list[CalibrationReport]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read report {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise DataError(f"cannot parse report {path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != REPORT_FORMAT:
        raise DataError(f"{path} is not a {REPORT_FORMAT} file")
    return [CalibrationReport.from_dict(r) for r in doc["calibrations"]]


def emit_profile(reports, path) -> None:
    """Tabular profile: distance, measured, then one predicted column per model/method pair."""
    if isinstance(reports, CalibrationReport):
        reports = [reports]
    if not reports:
        raise DataError("no calibrations to write a profile for")
    first = reports[0]
    for r in reports[1:]:
        if not np.array_equal(r.distances, first.distances):
            raise DataError("profile columns must share one measurement route")
    header = ["distance_m", "measured_db"] + [r.column for r in reports]
    lines = [",".join(header)]
    for k in range(first.distances.size):
        row = [first.distances[k], first.measured[k]] + [r.predicted[k] for r in reports]
        lines.append(",".join(repr(float(v)) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def save_model(m: ModelSpec, path) -> None:
    _write_text(path, json.dumps(to_config(m), indent=2) + "\n")


def load_model(path) -> ModelSpec:
    path = Path(path)
    try:
        return from_config(json.loads(path.read_text(encoding="utf-8")))
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc.strerror}") from None
    except ValueError as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"cannot parse model file {path}: {exc}") from None


def _write_text(path, text: str) -> None:
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from None
