"""
Pathloss model grammar and the builtin model registry.

A model is an ordered list of basis functions.  Each basis function is a sum
of monomials over eight primitives (the log10 and linear forms of distance,
frequency, Tx height and Rx height) plus an optional index ramp
``ramp_slope * (k - 1)`` that only applies on a calibration grid.

Measurement data are always held in SI-ish units (distance in meters,
frequency in MHz, heights in meters).  Every distance or frequency factor
declares the unit its model formula expects, and conversion happens here at
evaluation time.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, DomainError

LOG_PRIMITIVES = ("log10_d", "log10_f", "log10_hte", "log10_hre")
LINEAR_PRIMITIVES = ("d", "f", "hte", "hre")
PRIMITIVES = LOG_PRIMITIVES + LINEAR_PRIMITIVES

# size of one unit expressed in the storage unit (meters / MHz)
DISTANCE_UNITS = {"m": 1.0, "km": 1000.0}
FREQUENCY_UNITS = {"MHz": 1.0, "GHz": 1000.0}
HEIGHT_UNITS = {"m": 1.0}

_QUANTITY = {
    "log10_d": "d", "d": "d",
    "log10_f": "f", "f": "f",
    "log10_hte": "hte", "hte": "hte",
    "log10_hre": "hre", "hre": "hre",
}
_UNITS = {"d": DISTANCE_UNITS, "f": FREQUENCY_UNITS, "hte": HEIGHT_UNITS, "hre": HEIGHT_UNITS}
_DEFAULT_UNIT = {"d": "m", "f": "MHz", "hte": "m", "hre": "m"}

NOMINAL = "nominal"
ALTERNATIVE = "alternative"


@dataclass(frozen=True)
class Scenario:
    """Physical context of a link: frequency in MHz, antenna heights in meters."""

    frequency: float
    tx_height: float
    rx_height: float

    def __post_init__(self):
        for name in ("frequency", "tx_height", "rx_height"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value <= 0:
                raise DataError(f"scenario {name} must be a positive real, got {value!r}")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class Factor:
    """
    One primitive raised to an integer power.

    Log primitives evaluate ``log10(scale * x / reference) ** power`` and
    linear primitives ``(scale * x / reference) ** power``, where ``x`` is the
    quantity expressed in ``unit``.
    """

    primitive: str
    power: int = 1
    reference: float = 1.0
    scale: float = 1.0
    unit: str | None = None

    def __post_init__(self):
        if self.primitive not in PRIMITIVES:
            raise DataError(f"unknown primitive {self.primitive!r}; expected one of {PRIMITIVES}")
        if int(self.power) != self.power:
            raise DataError(f"factor power must be an integer, got {self.power!r}")
        object.__setattr__(self, "power", int(self.power))
        if not self.reference > 0 or not self.scale > 0:
            raise DataError("factor reference and scale must be strictly positive")
        quantity = _QUANTITY[self.primitive]
        unit = self.unit if self.unit is not None else _DEFAULT_UNIT[quantity]
        if unit not in _UNITS[quantity]:
            raise DataError(f"unit {unit!r} not valid for {quantity}; expected one of {list(_UNITS[quantity])}")
        object.__setattr__(self, "unit", unit)

    @property
    def quantity(self) -> str:
        return _QUANTITY[self.primitive]

    @property
    def is_log(self) -> bool:
        return self.primitive in LOG_PRIMITIVES

    def values(self, distances, scenario: Scenario) -> np.ndarray:
        q = self.quantity
        if q == "d":
            raw = np.asarray(distances, dtype=float)
        else:
            raw = np.full(np.shape(distances), {
                "f": scenario.frequency, "hte": scenario.tx_height, "hre": scenario.rx_height,
            }[q])
        arg = self.scale * (raw / _UNITS[q][self.unit]) / self.reference
        if self.is_log:
            if np.any(arg <= 0):
                raise DomainError(f"log10 of non-positive argument in {self.describe()}")
            return np.log10(arg) ** self.power
        if self.power < 0 and np.any(arg == 0):
            raise DomainError(f"division by zero in {self.describe()}")
        return arg ** self.power

    def describe(self) -> str:
        sym = f"{self.quantity}[{self.unit}]"
        if self.scale != 1.0:
            sym = f"{self.scale:g}*{sym}"
        if self.reference != 1.0:
            sym = f"{sym}/{self.reference:g}"
        text = f"log10({sym})" if self.is_log else f"({sym})"
        return text if self.power == 1 else f"{text}^{self.power}"


@dataclass(frozen=True)
class Monomial:
    coefficient: float
    factors: tuple[Factor, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coefficient", float(self.coefficient))
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def is_constant(self) -> bool:
        return not self.factors

    def values(self, distances, scenario: Scenario) -> np.ndarray:
        out = np.full(np.shape(distances), self.coefficient)
        for f in self.factors:
            out = out * f.values(distances, scenario)
        return out

    def describe(self) -> str:
        if not self.factors:
            return f"{self.coefficient:g}"
        return " * ".join([f"{self.coefficient:g}"] + [f.describe() for f in self.factors])


@dataclass(frozen=True)
class BasisFunction:
    """A labelled sum of monomials with an optional per-sample-index ramp (dB per sample)."""

    label: str
    monomials: tuple[Monomial, ...] = ()
    ramp_slope: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "monomials", tuple(self.monomials))
        object.__setattr__(self, "ramp_slope", float(self.ramp_slope))

    def values(self, distances, scenario: Scenario, indices=None) -> np.ndarray:
        """Evaluate at an array of distances (meters); ``indices`` are 1-based sample indices."""
        distances = np.asarray(distances, dtype=float)
        out = np.zeros(distances.shape)
        for m in self.monomials:
            out = out + m.values(distances, scenario)
        if indices is not None and self.ramp_slope != 0.0:
            out = out + self.ramp_slope * (np.asarray(indices, dtype=float) - 1.0)
        return out

    def describe(self) -> str:
        parts = [m.describe() for m in self.monomials] or ["0"]
        if self.ramp_slope:
            parts.append(f"{self.ramp_slope:g}*(k-1)")
        return " + ".join(parts)


@dataclass(frozen=True)
class ModelSpec:
    name: str
    variant: str
    basis: tuple[BasisFunction, ...]
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        if self.variant not in (NOMINAL, ALTERNATIVE):
            raise DataError(f"model variant must be {NOMINAL!r} or {ALTERNATIVE!r}, got {self.variant!r}")
        if not self.basis:
            raise DataError(f"model {self.name!r} has no basis functions")
        labels = [b.label for b in self.basis]
        if len(set(labels)) != len(labels):
            raise DataError(f"basis labels of model {self.name!r} are not unique: {labels}")
        if self.variant == ALTERNATIVE and not _is_unit_intercept(self.basis[0]):
            raise DataError(f"alternative model {self.name!r} must lead with the constant basis 1")

    @property
    def n(self) -> int:
        return len(self.basis)

    @property
    def labels(self) -> list[str]:
        return [b.label for b in self.basis]

    @property
    def has_ramps(self) -> bool:
        return any(b.ramp_slope != 0.0 for b in self.basis)


def _is_unit_intercept(b: BasisFunction) -> bool:
    return (
        len(b.monomials) == 1
        and b.monomials[0].is_constant
        and b.monomials[0].coefficient == 1.0
        and b.ramp_slope == 0.0
    )


def eval_basis(b: BasisFunction, d: float, s: Scenario, index: int | None = None) -> float:
    """
    Value (dB) of one basis function at distance ``d`` in meters.

    The ramp term ``ramp_slope * (index - 1)`` is added only when a 1-based
    sample index is supplied.
    """
    if not d > 0:
        raise DomainError(f"distance must be positive, got {d!r}")
    if index is not None and index < 1:
        raise ValueError(f"sample index is 1-based, got {index!r}")
    idx = None if index is None else np.array([index])
    return float(b.values(np.array([float(d)]), s, idx)[0])


def to_alternative(
    m: ModelSpec,
    grouping: Sequence[Sequence[int]],
    ramp_slopes: Sequence[float],
    name: str | None = None,
) -> ModelSpec:
    """
    Regroup a nominal model into the unit-intercept form required by SVD calibration.

    The result leads with the constant basis ``1``.  Each group of nominal
    basis functions (0-based indices, together a partition of ``range(N)``)
    is summed into one basis function carrying the group's ramp slope.  One
    dB is taken from the first constant term of the nominal model to make up
    the unit intercept.  A group left with no terms and no ramp is dropped.
    """
    if m.variant != NOMINAL:
        raise ValueError(f"to_alternative expects a nominal model, got {m.variant!r} model {m.name!r}")
    groups = [list(g) for g in grouping]
    if len(ramp_slopes) != len(groups):
        raise ValueError(f"{len(groups)} groups but {len(ramp_slopes)} ramp slopes")
    if any(len(g) == 0 for g in groups):
        raise ValueError("grouping contains an empty group")
    flat = sorted(i for g in groups for i in g)
    if flat != list(range(m.n)):
        raise ValueError(f"grouping must be a partition of basis indices 0..{m.n - 1}, got {groups}")

    lead = None
    for j, b in enumerate(m.basis):
        for t, mono in enumerate(b.monomials):
            if mono.is_constant:
                lead = (j, t)
                break
        if lead is not None:
            break
    if lead is None:
        raise ValueError(f"model {m.name!r} has no constant term to extract the intercept from")

    intercept_label = "intercept"
    new_basis = []
    for g, slope in zip(groups, ramp_slopes):
        monos = []
        for j in g:
            for t, mono in enumerate(m.basis[j].monomials):
                if (j, t) == lead:
                    mono = replace(mono, coefficient=mono.coefficient - 1.0)
                    if mono.coefficient == 0.0:
                        continue
                monos.append(mono)
        label = " + ".join(m.basis[j].label for j in g)
        if not monos and slope == 0.0:
            if lead[0] in g:
                intercept_label = label
            continue
        new_basis.append(BasisFunction(label, tuple(monos), slope))
    if intercept_label in {b.label for b in new_basis}:
        intercept_label = "unit intercept"
    intercept = BasisFunction(intercept_label, (Monomial(1.0),))
    return ModelSpec(name or f"{m.name}-alt", ALTERNATIVE, (intercept, *new_basis), m.description)


def recombine(m: ModelSpec, matrix, name: str | None = None) -> ModelSpec:
    """
    Linear recombination of a model's basis: new basis ``j`` is ``sum_i matrix[i, j] * phi_i``.

    The design matrix of the result equals ``D @ matrix`` (up to rounding),
    ramp terms included.
    """
    r = np.asarray(matrix, dtype=float)
    if r.ndim != 2 or r.shape[0] != m.n:
        raise ValueError(f"recombination matrix must have {m.n} rows, got shape {r.shape}")
    basis = []
    for j in range(r.shape[1]):
        monos = []
        slope = 0.0
        for i, b in enumerate(m.basis):
            c = r[i, j]
            if c == 0.0:
                continue
            monos.extend(replace(mono, coefficient=c * mono.coefficient) for mono in b.monomials)
            slope += c * b.ramp_slope
        basis.append(BasisFunction(f"combination {j + 1}", tuple(monos), slope))
    return ModelSpec(name or f"{m.name}-recombined", NOMINAL, tuple(basis), m.description)


# --- model config (dict form, JSON-serializable) ---------------------------

def to_config(m: ModelSpec) -> dict:
    return {
        "name": m.name,
        "variant": m.variant,
        "description": m.description,
        "basis": [
            {
                "label": b.label,
                "ramp_slope": b.ramp_slope,
                "monomials": [
                    {
                        "coefficient": mono.coefficient,
                        "factors": [
                            {"primitive": f.primitive, "power": f.power, "reference": f.reference,
                             "scale": f.scale, "unit": f.unit}
                            for f in mono.factors
                        ],
                    }
                    for mono in b.monomials
                ],
            }
            for b in m.basis
        ],
    }


def from_config(cfg: dict) -> ModelSpec:
    try:
        basis = []
        for b in cfg["basis"]:
            monos = []
            for mono in b.get("monomials", []):
                factors = tuple(
                    Factor(f["primitive"], f.get("power", 1), f.get("reference", 1.0),
                           f.get("scale", 1.0), f.get("unit"))
                    for f in mono.get("factors", [])
                )
                monos.append(Monomial(mono["coefficient"], factors))
            basis.append(BasisFunction(b["label"], tuple(monos), b.get("ramp_slope", 0.0)))
        return ModelSpec(cfg["name"], cfg.get("variant", NOMINAL), tuple(basis), cfg.get("description", ""))
    except KeyError as exc:
        raise DataError(f"model config is missing key {exc.args[0]!r}") from None
    except TypeError as exc:
        raise DataError(f"malformed model config: {exc}") from None


# --- builtin models --------------------------------------------------------

def _c(value):
    return Monomial(value)


def _t(coef, *factors):
    return Monomial(coef, factors)


def _b(label, *monos, ramp=0.0):
    return BasisFunction(label, monos, ramp)


def _log_d(unit, ref=1.0, power=1):
    return Factor("log10_d", power, ref, unit=unit)


def _log_f(unit, ref=1.0, power=1):
    return Factor("log10_f", power, ref, unit=unit)


def _log_hte(ref=1.0, power=1):
    return Factor("log10_hte", power, ref)


def _log_hre(ref=1.0, power=1, scale=1.0):
    return Factor("log10_hre", power, ref, scale)


def _ecc33():
    km, ghz = "km", "GHz"
    return ModelSpec("ecc33", NOMINAL, (
        _b("free-space constant", _c(92.4)),
        _b("free-space distance", _t(20, _log_d(km))),
        _b("free-space frequency", _t(20, _log_f(ghz))),
        _b("median constant", _c(20.41)),
        _b("median distance", _t(9.83, _log_d(km))),
        _b("median frequency", _t(7.894, _log_f(ghz)), _t(9.56, _log_f(ghz, power=2))),
        _b("tx height gain", _t(-13.98, _log_hte(200))),
        _b("tx height-distance gain", _t(-5.8, _log_hte(200), _log_d(km, power=2))),
        _b("rx height gain", _t(-42.57, _log_hre()), _c(-42.57 * -0.585)),
        _b("rx height-frequency gain",
           _t(13.7, _log_f(ghz), _log_hre()), _t(13.7 * -0.585, _log_f(ghz))),
    ), "ECC-33; d in km, f in GHz, heights in m")


def _sui(name, constant, slope, description):
    return ModelSpec(name, NOMINAL, (
        _b("intercept constant", _c(constant)),
        _b("distance", _t(slope, _log_d("m", 100))),
        _b("frequency correction", _t(6, _log_f("MHz", 2000))),
        _b("rx height correction", _t(-10.8, _log_hre(2000))),
        _b("terrain constant", _c(8.9)),
    ), description)


def _ufpa():
    return ModelSpec("ufpa", NOMINAL, (
        _b("constant", _c(1)),
        _b("height-frequency term",
           _t(-2.4, Factor("hte", 1, 6.2), Factor("f", -1, 30, unit="GHz")),
           _t(-2.4, Factor("hre", 1, 6.2), Factor("f", -1, 30, unit="GHz"))),
        _b("distance", _t(20, _log_d("km"))),
        _b("frequency", _t(12, _log_f("MHz"))),
    ), "UFPA; d in km, f in GHz and MHz as written, heights in m")


def _ericsson():
    km, mhz = "km", "MHz"
    return ModelSpec("ericsson", NOMINAL, (
        _b("constant", _c(36.2)),
        _b("distance", _t(30.2, _log_d(km))),
        _b("tx height", _t(-12, _log_hte())),
        _b("tx height-distance", _t(0.1, _log_hte(), _log_d(km))),
        _b("rx height", _t(-3.2, _log_hre(power=2, scale=11.75))),
        _b("frequency", _t(44.49, _log_f(mhz)), _t(-4.78, _log_f(mhz, power=2))),
    ), "Ericsson; d in km, f in MHz, heights in m")


def _lee():
    return ModelSpec("lee", NOMINAL, (
        _b("constant", _c(124)),
        _b("distance", _t(30.5, _log_d("km", 1.6))),
        _b("frequency", _t(30, _log_f("MHz", 900))),
        _b("correction", _c(-3.001)),
    ), "Lee; d in km, f in MHz")


def _winner2():
    return ModelSpec("winner2", NOMINAL, (
        _b("constant", _c(46.8)),
        _b("distance", _t(18.7, _log_d("km"))),
        _b("frequency", _t(20, _log_f("GHz", 5.0))),
    ), "WINNER-II; d in km, f in GHz")


def _itur():
    return ModelSpec("itur", NOMINAL, (
        _b("constant", _c(6.0)),
        _b("distance", _t(25, _log_d("km"))),
        _b("frequency", _t(20, _log_f("MHz"))),
        _b("correction", _c(-28)),
    ), "ITU-R indoor LOS; d in km, f in MHz")


# nominal name -> (grouping, ramp slopes) for the unit-intercept alternatives
ALTERNATIVE_GROUPINGS = {
    "ecc33": ([[0, 1, 2], [3, 4, 5], [6, 7, 8, 9]], [0.09, 0.012, 0.031]),
    "sui": ([[0, 1, 2], [3, 4]], [5.22, 0.95]),
    "ufpa": ([[0, 1], [2, 3]], [0.58, 0.0]),
    "ericsson": ([[0, 1, 2], [3, 4, 5]], [0.0, 0.58]),
    "lee": ([[0, 1], [2, 3]], [0.0, 2.85]),
    "winner2": ([[0, 1], [2]], [0.0, 0.065]),
    "itur": ([[0, 1], [2, 3]], [0.0, 0.095]),
}


def builtin_models() -> list[ModelSpec]:
    """All builtin models, each nominal form followed by its alternative (when defined)."""
    nominal = [
        _ecc33(),
        _sui("sui", 20.7412, 52.15, "SUI; d in m, f in MHz, heights in m"),
        _sui("sui-indoor", 100.7412, 129.8875, "SUI indoor variant; d in m, f in MHz, heights in m"),
        _ufpa(),
        _ericsson(),
        _lee(),
        _winner2(),
        _itur(),
    ]
    out = []
    for m in nominal:
        out.append(m)
        if m.name in ALTERNATIVE_GROUPINGS:
            grouping, ramps = ALTERNATIVE_GROUPINGS[m.name]
            out.append(to_alternative(m, grouping, ramps))
    return out


def model_names() -> list[str]:
    return [m.name for m in builtin_models()]


def get_model(name: str) -> ModelSpec:
    """
    Look up a builtin model by exact name or unambiguous prefix.

    Raises DataError listing the candidates when the name is unknown or
    ambiguous.
    """
    models = {m.name: m for m in builtin_models()}
    key = name.strip().lower()
    if key in models:
        return models[key]
    candidates = [n for n in models if n.startswith(key)]
    if len(candidates) == 1:
        return models[candidates[0]]
    if candidates:
        raise DataError(f"ambiguous model name {name!r}; candidates: {', '.join(candidates)}")
    raise DataError(f"unknown model {name!r}; available: {', '.join(models)}")


def iter_factors(m: ModelSpec) -> Iterable[Factor]:
    for b in m.basis:
        for mono in b.monomials:
            yield from mono.factors
