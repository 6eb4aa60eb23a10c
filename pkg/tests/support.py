"""Shared helpers and independent oracles for the test suite."""

from fractions import Fraction

import numpy as np

from pathcal import MeasurementSet, Scenario
from pathcal.dataio import synth_generate

INDOOR_MODELS = ("winner2", "itur")

# filled by test_acceptance, printed by conftest's terminal summary
ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")


def is_indoor(model):
    return model.name.startswith(INDOOR_MODELS)


def random_scenario(rng, indoor=False):
    if indoor:
        return Scenario(rng.uniform(24000, 40000), rng.uniform(1.5, 3.0), rng.uniform(1.0, 2.0))
    return Scenario(rng.uniform(800, 3500), rng.uniform(20, 60), rng.uniform(1.0, 3.0))


def random_route(rng, m, indoor=False):
    """Sorted, distinct, log-uniform distances in meters along a measurement route."""
    lo, hi = (1.0, 60.0) if indoor else (50.0, 5000.0)
    start = np.exp(rng.uniform(np.log(lo), np.log(lo * 4)))
    stop = np.exp(rng.uniform(np.log(hi / 4), np.log(hi)))
    return np.sort(np.exp(rng.uniform(np.log(start), np.log(stop), m)))


def random_coeffs(rng, model):
    c = rng.uniform(0.5, 1.5, model.n)
    if model.variant == "alternative":
        c[0] = rng.uniform(-20, 20)
    return c


def random_dataset(model, seed, m=40, noise=3.0):
    rng = np.random.default_rng(seed)
    indoor = is_indoor(model)
    s = random_scenario(rng, indoor)
    d = random_route(rng, m, indoor)
    return synth_generate(model, random_coeffs(rng, model), s, d, noise, seed)


def random_invertible(rng, n):
    """Random recombination matrix with condition number at most 4."""
    q1, _ = np.linalg.qr(rng.normal(size=(n, n)))
    q2, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q1 @ np.diag(rng.uniform(0.5, 2.0, n)) @ q2


def rel_diff(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def exact_normal_solve(design, measured):
    """Least squares by exact rational Gauss-Jordan on D^T D a = D^T p (full-rank D only)."""
    d = [[Fraction(x) for x in row] for row in np.asarray(design).tolist()]
    p = [Fraction(x) for x in np.asarray(measured).tolist()]
    n = len(d[0])
    aug = [[sum(r[i] * r[j] for r in d) for j in range(n)] + [sum(r[i] * pk for r, pk in zip(d, p))]
           for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n] for row in aug]


def dataset(distances, pathloss, scenario=None):
    return MeasurementSet(np.asarray(distances, float), np.asarray(pathloss, float),
                          scenario or Scenario(1800.0, 30.0, 1.5))


def exact_grg_mape(mea, pre, xi=Fraction(1, 2), sigma=Fraction(1, 10), beta=Fraction(9, 10)):
    """Grey relational grade, MAPE score and blend in exact rational arithmetic."""
    mea = [Fraction(x) for x in mea]
    pre = [Fraction(x) for x in pre]

    def norm(x):
        hi, lo = max(x), min(x)
        return [(hi - v) / (hi - lo) for v in x]

    dev = [abs(a - b) for a, b in zip(norm(mea), norm(pre))]
    dmin, dmax = min(dev), max(dev)
    zeta = [Fraction(1) if d == dmin else (dmin + xi * dmax) / (d + xi * dmax) for d in dev]
    grade = sum(zeta) / len(zeta)
    eps_a = sum(abs(a - b) / a for a, b in zip(mea, pre)) / len(mea)
    return grade, eps_a, abs(sigma * grade + beta * (1 - eps_a))
