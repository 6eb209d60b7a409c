"""Model parameterisation for the n-species forest model.

Holds the competition functions f_i, the species parameters, the coupling
matrix zeta, the weighted totals Z_i = sum_j zeta_ij A_j, the delay
normalisation constants C_i and the closed-form equilibrium.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, UnsupportedError, ValidationError
from .numerics import bisect_scalar

log = logging.getLogger(__name__)

COMPETITION_KINDS = ("rational-decay", "exponential-decay", "constant")
HISTORY_KINDS = ("constant", "linear", "sinusoidal", "sampled")


@dataclass(frozen=True)
class CompetitionFunction:
    """Positive, non-increasing juvenile growth rate f(x).

    rational-decay:    kappa / (1 + (x/theta)**p)
    exponential-decay: kappa * exp(-rate * x)   (single species only)
    constant:          kappa
    """

    kind: str = "rational-decay"
    kappa: float = 1.0
    theta: Optional[float] = None
    p: Optional[float] = None
    rate: Optional[float] = None

    def __post_init__(self):
        if self.kind not in COMPETITION_KINDS:
            raise ValidationError(f"unknown competition function kind {self.kind!r}")
        _require_positive("kappa", self.kappa)
        if self.kind == "rational-decay":
            _require_positive("theta", self.theta)
            _require_positive("p", self.p)
        elif self.kind == "exponential-decay":
            _require_positive("rate", self.rate)

    @classmethod
    def rational(cls, kappa=1.0, theta=1.0, p=1.0):
        return cls("rational-decay", kappa=kappa, theta=theta, p=p)

    @classmethod
    def exponential(cls, kappa=1.0, rate=1.0):
        return cls("exponential-decay", kappa=kappa, rate=rate)

    @classmethod
    def constant(cls, kappa=1.0):
        return cls("constant", kappa=kappa)

    @property
    def has_growth_bound(self) -> bool:
        """Whether sup_x f(x)/f(cx) is finite for every c >= 1."""
        return self.kind != "exponential-decay"

    def __call__(self, x):
        """Vectorised evaluation (numpy arrays or floats)."""
        if self.kind == "rational-decay":
            return self.kappa / (1.0 + (np.asarray(x, dtype=float) / self.theta) ** self.p)
        if self.kind == "exponential-decay":
            return self.kappa * np.exp(-self.rate * np.asarray(x, dtype=float))
        return np.full_like(np.asarray(x, dtype=float), self.kappa)

    def scalar(self):
        """Plain-float closure, used in the integrator's inner loop."""
        kappa = float(self.kappa)
        if self.kind == "rational-decay":
            theta, p = float(self.theta), float(self.p)
            if p == 1.0:
                return lambda x: kappa / (1.0 + x / theta)
            if p == 2.0:
                return lambda x: kappa / (1.0 + (x / theta) * (x / theta))
            return lambda x: kappa / (1.0 + (x / theta) ** p)
        if self.kind == "exponential-decay":
            rate = float(self.rate)
            return lambda x: kappa * math.exp(-rate * x)
        return lambda x: kappa

    def inverse(self, y: float) -> Optional[float]:
        """Nonnegative x with f(x) = y, or None when no such x exists."""
        if self.kind == "constant" or not (0.0 < y <= self.kappa):
            return None
        if self.kind == "rational-decay":
            return self.theta * (self.kappa / y - 1.0) ** (1.0 / self.p)
        return math.log(self.kappa / y) / self.rate


def eval_f(f: CompetitionFunction, x: float) -> float:
    """f(x) for a single nonnegative argument."""
    if not math.isfinite(x):
        raise ValidationError(f"competition function argument must be finite, got {x!r}")
    if x < 0.0:
        raise ValidationError(f"competition function argument must be >= 0, got {x!r}")
    return float(f(x))


def growth_ratio_bound(f: CompetitionFunction, c: float) -> float:
    """M_f(c) = sup_{x >= 0} f(x) / f(cx)."""
    if not (math.isfinite(c) and c >= 1.0):
        raise ValidationError(f"growth ratio needs c >= 1, got {c!r}")
    if f.kind == "exponential-decay":
        raise UnsupportedError(
            "exponential-decay f has unbounded growth ratio f(x)/f(cx) for c > 1"
        )
    if f.kind == "constant":
        return 1.0
    return float(c ** f.p)


@dataclass(frozen=True)
class InitialHistory:
    """Nonnegative initial data phi(s) for s <= 0.

    constant:   value
    linear:     value + slope * s
    sinusoidal: value + amplitude * sin(2 pi s / period + phase)
    sampled:    piecewise-linear through (times, values)
    """

    kind: str = "constant"
    value: float = 1.0
    slope: float = 0.0
    amplitude: float = 0.0
    period: float = 1.0
    phase: float = 0.0
    times: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in HISTORY_KINDS:
            raise ValidationError(f"unknown history kind {self.kind!r}")
        if self.kind == "sinusoidal":
            _require_positive("period", self.period)
        if self.kind == "sampled":
            t = np.asarray(self.times, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if t.ndim != 1 or t.size < 2 or t.shape != v.shape:
                raise ValidationError("sampled history needs matching times/values, at least 2 points")
            if np.any(np.diff(t) <= 0):
                raise ValidationError("sampled history abscissae must be strictly increasing")
            if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
                raise ValidationError("sampled history must be finite")
            object.__setattr__(self, "times", tuple(float(x) for x in t))
            object.__setattr__(self, "values", tuple(float(x) for x in v))

    @classmethod
    def constant(cls, value):
        return cls("constant", value=float(value))

    @classmethod
    def linear(cls, value, slope):
        return cls("linear", value=float(value), slope=float(slope))

    @classmethod
    def sinusoidal(cls, value, amplitude, period, phase=0.0):
        return cls("sinusoidal", value=float(value), amplitude=float(amplitude),
                   period=float(period), phase=float(phase))

    @classmethod
    def sampled(cls, times, values):
        return cls("sampled", times=tuple(times), values=tuple(values))

    @property
    def earliest(self) -> float:
        """Earliest time at which the history can be evaluated."""
        return self.times[0] if self.kind == "sampled" else -math.inf

    def breakpoints(self):
        return self.times if self.kind == "sampled" else ()

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.full_like(s, self.value)
        if self.kind == "linear":
            return self.value + self.slope * s
        if self.kind == "sinusoidal":
            return self.value + self.amplitude * np.sin(2.0 * np.pi * s / self.period + self.phase)
        if np.any(s < self.times[0] - 1e-12 * max(1.0, abs(self.times[0]))):
            raise DomainError(f"sampled history queried before its first abscissa {self.times[0]}")
        return np.interp(s, self.times, self.values)

    def scalar(self):
        if self.kind == "constant":
            v = self.value
            return lambda s: v
        if self.kind == "linear":
            v, b = self.value, self.slope
            return lambda s: v + b * s
        if self.kind == "sinusoidal":
            v, a, w, ph = self.value, self.amplitude, 2.0 * math.pi / self.period, self.phase
            return lambda s: v + a * math.sin(w * s + ph)
        return lambda s: float(self(s))


@dataclass(frozen=True)
class SpeciesParams:
    mu_A: float
    mu_J: float
    beta: float
    tau0: float
    f: CompetitionFunction = field(default_factory=CompetitionFunction.rational)
    history: InitialHistory = field(default_factory=InitialHistory)


@dataclass(frozen=True)
class ModelConfig:
    """Full n-species parameterisation; validated on construction."""

    species: tuple
    zeta: tuple

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        try:
            z = tuple(tuple(float(v) for v in row) for row in self.zeta)
        except TypeError as exc:
            raise ValidationError("zeta must be an n x n matrix") from exc
        object.__setattr__(self, "zeta", z)
        self._validate()

    @property
    def n(self) -> int:
        return len(self.species)

    @property
    def zeta_array(self) -> np.ndarray:
        return np.array(self.zeta, dtype=float)

    @property
    def is_coupled(self) -> bool:
        n = self.n
        return any(self.zeta[i][j] > 0 for i in range(n) for j in range(n) if i != j)

    def lookback(self, j: int) -> float:
        """How far back species j's history is read (its own delay or any species it shades)."""
        n = self.n
        return max(
            [self.species[j].tau0]
            + [self.species[i].tau0 for i in range(n) if self.zeta[i][j] > 0]
        )

    def _validate(self):
        n = self.n
        if n < 1:
            raise ValidationError("at least one species is required")
        if len(self.zeta) != n or any(len(row) != n for row in self.zeta):
            raise ValidationError(f"zeta must be {n} x {n}")
        for i, sp in enumerate(self.species):
            if not isinstance(sp, SpeciesParams):
                raise ValidationError(f"species {i} is not a SpeciesParams")
            for name in ("mu_A", "mu_J", "beta"):
                v = getattr(sp, name)
                if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                    raise ValidationError(
                        f"positive rates: species[{i}].{name} must be > 0, got {v!r}"
                    )
            if not (math.isfinite(sp.tau0) and sp.tau0 >= 0):
                raise ValidationError(f"species[{i}].tau0 must be finite and >= 0, got {sp.tau0!r}")
        for i in range(n):
            for j in range(n):
                v = self.zeta[i][j]
                if not (math.isfinite(v) and v >= 0):
                    raise ValidationError(f"coupling weights: zeta[{i}][{j}] must be >= 0, got {v!r}")
            if self.zeta[i][i] <= 0:
                raise ValidationError(
                    f"self-competition: zeta[{i}][{i}] must be > 0, got {self.zeta[i][i]!r}"
                )
        if n > 1 and self.is_coupled:
            for i, sp in enumerate(self.species):
                if not sp.f.has_growth_bound:
                    raise ValidationError(
                        f"growth-ratio bound: species[{i}] uses exponential-decay f, whose ratio "
                        "f(x)/f(cx) is unbounded; it is only allowed without cross-coupling"
                    )
        for j, sp in enumerate(self.species):
            back = self.lookback(j)
            h = sp.history
            if h.earliest > -back + 1e-12 * max(1.0, back):
                raise ValidationError(
                    f"species[{j}] history starts at {h.earliest} but must cover [{-back}, 0]"
                )
            grid = np.linspace(-back, 0.0, 1001) if back > 0 else np.zeros(1)
            pts = np.concatenate([grid, [t for t in h.breakpoints() if -back <= t <= 0]])
            vals = h(pts)
            if not np.all(np.isfinite(vals)) or np.any(vals < 0):
                raise ValidationError(f"species[{j}] history must be finite and >= 0 on [{-back}, 0]")


@dataclass(frozen=True)
class DelayNormalization:
    """C_i = integral of f_i(Z_i,phi) over [-tau_i0, 0]: the conserved delay integral."""

    C: tuple

    def __getitem__(self, i):
        return self.C[i]

    def __len__(self):
        return len(self.C)


def weighted_total(config: ModelConfig, i: int, A: Sequence[float]) -> float:
    """Z_i = sum_j zeta_ij A_j."""
    if not 0 <= i < config.n:
        raise ValidationError(f"species index {i} out of range for n={config.n}")
    if len(A) != config.n:
        raise ValidationError(f"expected {config.n} abundances, got {len(A)}")
    return math.fsum(z * a for z, a in zip(config.zeta[i], A))


def history_total(config: ModelConfig, i: int):
    """Vectorised s -> Z_i,phi(s) over the initial histories."""
    row = config.zeta[i]
    terms = [(row[j], config.species[j].history) for j in range(config.n) if row[j] > 0]

    def Z(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for z, h in terms:
            out = out + z * h(s)
        return out

    return Z


def history_breakpoints(config: ModelConfig, i: int, lo: float):
    """Kinks of Z_i,phi inside (lo, 0) coming from sampled histories."""
    row = config.zeta[i]
    pts = set()
    for j in range(config.n):
        if row[j] > 0:
            pts.update(t for t in config.species[j].history.breakpoints() if lo < t < 0)
    return sorted(pts)


def compute_normalization(config: ModelConfig) -> DelayNormalization:
    """Adaptive quadrature of f_i(Z_i,phi) over [-tau_i0, 0] for every species."""
    C = []
    for i, sp in enumerate(config.species):
        if sp.tau0 == 0:
            C.append(0.0)
            continue
        Z = history_total(config, i)
        f = sp.f

        def integrand(s):
            return float(f(Z(s)))

        edges = [-sp.tau0] + history_breakpoints(config, i, -sp.tau0) + [0.0]
        parts = []
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(integrand, a, b, epsabs=1e-13, epsrel=1e-13, limit=500)
            parts.append(val)
        C.append(math.fsum(parts))
    return DelayNormalization(tuple(C))


def equilibrium(config: ModelConfig, i: int, C_i: float):
    """Positive steady state (A*, tau_bar) of species i, or None.

    Stationary delay forces beta e^{-mu_J tau_bar} = mu_A; stationary delay
    integral forces f(zeta_ii A*) tau_bar = C_i. Only rows without
    cross-coupling have this closed form.
    """
    sp = config.species[i]
    row = config.zeta[i]
    if any(row[j] > 0 for j in range(config.n) if j != i):
        raise UnsupportedError(f"species {i} is cross-coupled; no closed-form equilibrium")
    if sp.beta <= sp.mu_A:
        log.info("species %d: beta <= mu_A, no positive-delay equilibrium", i)
        return None
    tau_bar = math.log(sp.beta / sp.mu_A) / sp.mu_J
    target = C_i / tau_bar
    f = sp.f.scalar()
    zii = row[i]
    if sp.f.kind == "constant":
        log.info("species %d: constant f leaves A* undetermined", i)
        return None
    if not (0.0 < target < f(0.0)):
        log.info("species %d: C/tau_bar=%g outside the range of f", i, target)
        return None
    hi = 1.0
    while f(zii * hi) > target:
        hi *= 2.0
        if hi > 1e300:
            return None
    A_star = bisect_scalar(lambda a: target - f(zii * a), 0.0, hi, xtol=1e-16)
    return A_star, tau_bar


def _require_positive(name, v):
    if v is None or not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
        raise ValidationError(f"{name} must be a positive finite number, got {v!r}")
