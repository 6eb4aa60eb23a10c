"""
Design/Gram systems, the QMM and SVD calibration solvers, prediction and decomposition.

Both solvers fit coefficients ``a`` minimizing ``||P_mea - D a||_2`` where
``D[k, j]`` is basis function ``j`` evaluated at sample ``k`` (ramp terms
included).  The QMM path tests the prediction equation against the basis
functions themselves and solves the Gram system ``D^T D a = D^T P`` with a
Cholesky factorization; the SVD path applies a truncated pseudoinverse of
``D`` directly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .errors import DataError, DomainError, RampOffGridWarning, SingularGram
from .registry import ModelSpec, Scenario

EPS = np.finfo(float).eps
SINGULAR_THRESHOLD = 1.0 / EPS
ILL_CONDITIONED = 1e8
REFINEMENT_STEPS = 2

QMM = "qmm"
SVD = "svd"
METHODS = (QMM, SVD)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Ordered measurement samples; distances in meters, pathloss in dB. Row order is the sample index."""

    distances: np.ndarray
    pathloss: np.ndarray
    scenario: Scenario

    def __post_init__(self):
        d = _frozen(self.distances).reshape(-1)
        p = _frozen(self.pathloss).reshape(-1)
        if d.size == 0:
            raise DataError("a measurement set needs at least one sample")
        if d.shape != p.shape:
            raise DataError(f"{d.size} distances but {p.size} pathloss values")
        bad = np.flatnonzero(~(d > 0))
        if bad.size:
            raise DataError(f"non-positive distance at sample {bad[0] + 1}")
        bad = np.flatnonzero(~np.isfinite(p))
        if bad.size:
            raise DataError(f"non-finite pathloss at sample {bad[0] + 1}")
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "pathloss", p)

    @property
    def m(self) -> int:
        return self.distances.size

    @property
    def indices(self) -> np.ndarray:
        return np.arange(1, self.m + 1)

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.distances.tolist(), self.pathloss.tolist()))


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    entries: np.ndarray
    model: ModelSpec
    scenario: Scenario

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True, eq=False)
class GramSystem:
    """Gram matrix of basis inner products and the projection of the measurements onto the basis."""

    gram: np.ndarray
    projection: np.ndarray
    design: DesignMatrix | None = None
    measured: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    coefficients: np.ndarray
    method: str
    residual_seminorm: float
    condition_estimate: float
    rank: int
    warnings: tuple[str, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.coefficients.size


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Per-sample, per-component contributions; ``percent`` rows are NaN where the net is degenerate."""

    distances: np.ndarray
    labels: tuple[str, ...]
    contributions: np.ndarray
    net: np.ndarray
    percent: np.ndarray
    warnings: tuple[str, ...] = ()


def design_matrix(m: ModelSpec, data: MeasurementSet) -> DesignMatrix:
    idx = data.indices
    cols = []
    for j, b in enumerate(m.basis):
        try:
            col = b.values(data.distances, data.scenario, idx)
        except DomainError as exc:
            bad = _first_bad_row(b, data)
            raise DomainError(f"basis {j + 1} ({b.label!r}) at sample {bad}: {exc}") from None
        cols.append(col)
    entries = np.column_stack(cols)
    if not np.all(np.isfinite(entries)):
        k, j = np.argwhere(~np.isfinite(entries))[0]
        raise DomainError(f"non-finite design entry at sample {k + 1}, basis {j + 1}")
    entries.setflags(write=False)
    return DesignMatrix(entries, m, data.scenario)


def _first_bad_row(b, data) -> int:
    for k, d in enumerate(data.distances):
        try:
            b.values(np.array([d]), data.scenario)
        except DomainError:
            return k + 1
    return 1


def gram_system(D: DesignMatrix, data: MeasurementSet) -> GramSystem:
    a = D.entries
    if a.shape[0] != data.m:
        raise DataError(f"design matrix has {a.shape[0]} rows but data has {data.m} samples")
    p = data.pathloss
    return GramSystem(a.T @ a, a.T @ p, D, p)


def condition_estimate(g) -> float:
    """
    Ratio of the largest to smallest singular value of the Gram matrix.

    Returns ``inf`` when the matrix is numerically rank deficient, i.e. the
    smallest singular value is below ``n * eps * largest``.
    """
    gram = np.asarray(g.gram if isinstance(g, GramSystem) else g, dtype=float)
    s = np.linalg.svd(gram, compute_uv=False)
    if s.size == 0 or s[0] == 0.0 or s[-1] <= s[0] * gram.shape[0] * EPS:
        return float("inf")
    return float(s[0] / s[-1])


def solve_qmm(g: GramSystem) -> CalibrationResult:
    """
    Solve the Gram system for the calibration coefficients.

    Parameters
    ----------
    g : GramSystem
        Symmetric positive semi-definite Gram matrix and projection vector.

    Returns
    -------
    CalibrationResult
        ``method == "qmm"``, ``rank == N``.

    When ``g`` carries its design matrix and measurements (as built by
    :func:`gram_system`), the Cholesky solution is refined against the
    residual ``P - D a`` and the residual seminorm is reported; otherwise
    ``residual_seminorm`` is NaN.

    Raises
    ------
    SingularGram
        If the condition estimate exceeds ``1/eps`` or the Cholesky
        factorization breaks down; the basis is then linearly dependent and
        the solution is not unique.
    """
    cond = condition_estimate(g)
    n = g.gram.shape[0]
    if cond > SINGULAR_THRESHOLD:
        raise SingularGram(
            f"Gram matrix is singular (condition estimate {cond:.3g}); basis functions are linearly dependent",
            cond,
        )
    # symmetric diagonal equilibration; columns of very different size otherwise cost digits
    scale = 1.0 / np.sqrt(np.diag(g.gram))
    try:
        factor = la.cho_factor(g.gram * np.outer(scale, scale), lower=True)
    except la.LinAlgError:
        raise SingularGram("Cholesky factorization of the Gram matrix failed; "
                           "basis functions are linearly dependent", cond) from None
    coeffs = scale * la.cho_solve(factor, scale * g.projection)
    if g.design is not None and g.measured is not None:
        # iterative refinement with the residual taken from D rather than from the Gram identity
        a = g.design.entries
        for _ in range(REFINEMENT_STEPS):
            coeffs = coeffs + scale * la.cho_solve(factor, scale * (a.T @ (g.measured - a @ coeffs)))
    notes = []
    if cond > ILL_CONDITIONED:
        notes.append(f"IllConditioned: Gram condition estimate {cond:.3g} exceeds {ILL_CONDITIONED:.0e}")
    if g.design is not None and g.measured is not None:
        resid = float(np.linalg.norm(g.measured - g.design.entries @ coeffs))
    else:
        resid = float("nan")
    return CalibrationResult(_frozen(coeffs), QMM, resid, cond, n, tuple(notes))


def solve_svd(D: DesignMatrix, data: MeasurementSet) -> CalibrationResult:
    """
    Truncated-SVD pseudoinverse solution; minimum-norm when the design is rank deficient.

    Singular values at or below ``max(M, N) * eps * s_max`` are discarded.
    Rank deficiency is reported as a ``RankDeficient`` warning, not an error.
    """
    a = D.entries
    p = data.pathloss
    if a.shape[0] != p.size:
        raise DataError(f"design matrix has {a.shape[0]} rows but data has {p.size} samples")
    m, n = a.shape
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    tau = max(m, n) * EPS * (s[0] if s.size else 0.0)
    keep = s > tau
    rank = int(np.count_nonzero(keep))
    coeffs = vt[keep].T @ ((u[:, keep].T @ p) / s[keep])
    notes = []
    if rank < n:
        notes.append(f"RankDeficient: design rank {rank} < {n} basis functions; minimum-norm solution returned")
        cond = float("inf")
    else:
        cond = float((s[0] / s[-1]) ** 2)
        if cond > ILL_CONDITIONED:
            notes.append(f"IllConditioned: Gram condition estimate {cond:.3g} exceeds {ILL_CONDITIONED:.0e}")
    resid = float(np.linalg.norm(p - a @ coeffs))
    return CalibrationResult(_frozen(coeffs), SVD, resid, cond, rank, tuple(notes))


def calibrate(m: ModelSpec, data: MeasurementSet, method: str = QMM) -> CalibrationResult:
    D = design_matrix(m, data)
    if method == QMM:
        return solve_qmm(gram_system(D, data))
    if method == SVD:
        return solve_svd(D, data)
    raise ValueError(f"unknown calibration method {method!r}; expected one of {METHODS}")


def _coeffs(m: ModelSpec, a) -> np.ndarray:
    coeffs = np.asarray(a.coefficients if isinstance(a, CalibrationResult) else a, dtype=float)
    if coeffs.shape != (m.n,):
        raise DataError(f"model {m.name!r} has {m.n} basis functions but {coeffs.size} coefficients were given")
    return coeffs


def predict_many(m: ModelSpec, a, distances, s: Scenario, indices=None) -> np.ndarray:
    """
    Predicted pathloss (dB) at an array of distances in meters.

    Without ``indices`` the ramp terms contribute nothing and a
    RampOffGridWarning is issued if the model has any.
    """
    coeffs = _coeffs(m, a)
    d = np.asarray(distances, dtype=float)
    if np.any(~(d > 0)):
        raise DomainError("distances must be positive")
    if indices is None and m.has_ramps:
        warnings.warn(
            f"model {m.name!r} has index-ramp terms; prediction off the calibration grid uses ramp 0",
            RampOffGridWarning, stacklevel=2,
        )
    out = np.zeros(d.shape)
    for c, b in zip(coeffs, m.basis):
        out = out + c * b.values(d, s, indices)
    return out


def predict(m: ModelSpec, a, d: float, s: Scenario, index: int | None = None) -> float:
    idx = None if index is None else np.array([index])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RampOffGridWarning)
        value = predict_many(m, a, np.array([float(d)]), s, idx)[0]
    if index is None and m.has_ramps:
        warnings.warn(
            f"model {m.name!r} has index-ramp terms; prediction off the calibration grid uses ramp 0",
            RampOffGridWarning, stacklevel=2,
        )
    return float(value)


def fitted(m: ModelSpec, a, data: MeasurementSet) -> np.ndarray:
    """Predictions along the calibration grid (ramp terms at each sample's index)."""
    return predict_many(m, a, data.distances, data.scenario, data.indices)


def residual_seminorm(data, predictions) -> float:
    measured = data.pathloss if isinstance(data, MeasurementSet) else np.asarray(data, dtype=float)
    pred = np.asarray(predictions, dtype=float)
    if measured.shape != pred.shape:
        raise DataError(f"length mismatch: {measured.size} measured vs {pred.size} predicted")
    return float(np.linalg.norm(measured - pred))


def decompose(m: ModelSpec, a, data: MeasurementSet, rtol: float = 1e-9) -> Decomposition:
    """
    Split each fitted prediction into its per-component contributions.

    ``percent[k, j] = 100 * contribution[k, j] / net[k]``.  Samples whose net
    prediction is within ``rtol * max(1, sum_j |contribution[k, j]|)`` of
    zero get NaN percentages and a ``DegenerateNet`` warning.
    """
    coeffs = _coeffs(m, a)
    contrib = design_matrix(m, data).entries * coeffs
    net = contrib.sum(axis=1)
    scale = np.maximum(1.0, np.abs(contrib).sum(axis=1))
    degenerate = np.abs(net) <= rtol * scale
    percent = np.full(contrib.shape, np.nan)
    ok = ~degenerate
    percent[ok] = 100.0 * contrib[ok] / net[ok][:, None]
    notes = ()
    if degenerate.any():
        rows = ", ".join(str(k + 1) for k in np.flatnonzero(degenerate))
        notes = (f"DegenerateNet: net prediction is zero at sample(s) {rows}; percentages omitted",)
    return Decomposition(data.distances, tuple(m.labels), contrib, net, percent, notes)
