"""Asymptotic secret key rate in the infinite-decoy limit.

For each event type the rate is

    K = Σ_{(m,n) ∈ {(1,1),(1,2),(2,1)}} Q^(m,n) [1 − h₂(e_p^(m,n))]  −  Q_tot f(e_tot) h₂(e_tot)

with ``Q_tot = Σ Q^(m,n)`` and ``e_tot`` the Q-weighted mean bit error, and K
clamped at zero.  Rates are in bits per signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DegenerateTotalsError, DomainError
from .events import EventType
from .optics import DEFAULT_N_MAX, PA_PAIRS, YieldTable, build_yield_table, poisson_pmf

ENZER_CONSTANT = 1.1581
ENZER_CUBIC = 57.200


@dataclass(frozen=True)
class ErrorCorrection:
    """Error-correction inefficiency: Enzer's cubic fit or a fixed factor."""

    kind: str = "enzer"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("enzer", "fixed"):
            raise DomainError(f"unknown error-correction mode {self.kind!r}")
        if self.kind == "fixed" and (self.value is None or self.value < 1):
            raise DomainError("a fixed error-correction factor must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "ErrorCorrection":
        """Parse ``enzer`` or ``fixed:<value>``."""
        text = text.strip()
        if text in ("enzer", "enzer_cubic"):
            return cls("enzer")
        if text.startswith("fixed:"):
            try:
                return cls("fixed", float(text.split(":", 1)[1]))
            except ValueError:
                raise DomainError(f"bad fixed error-correction value in {text!r}") from None
        raise DomainError(f"error-correction mode must be 'enzer' or 'fixed:<v>', got {text!r}")

    def __str__(self) -> str:
        return "enzer" if self.kind == "enzer" else f"fixed:{self.value:g}"


@dataclass(frozen=True)
class ExperimentParams:
    eta: float = 0.045
    dark: float = 8.5e-7
    alpha: float = 0.21
    mu_a: float = 0.1
    mu_b: float | None = None
    fe: ErrorCorrection = field(default_factory=ErrorCorrection)
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        if self.mu_b is None:
            object.__setattr__(self, "mu_b", self.mu_a)
        if not 0 < self.eta <= 1:
            raise DomainError(f"eta must be in (0, 1], got {self.eta}")
        if not 0 <= self.dark < 1:
            raise DomainError(f"dark must be in [0, 1), got {self.dark}")
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not (self.mu_a > 0 and self.mu_b > 0):
            raise DomainError("mean photon numbers must be positive")
        if self.n_max < 2:
            raise DomainError("n_max must be at least 2")

    def key(self) -> tuple:
        return (self.eta, self.dark, self.alpha, self.mu_a, self.mu_b, str(self.fe), self.n_max)


GYS = ExperimentParams()


@dataclass(frozen=True)
class KeyRatePoint:
    L: float
    type: EventType
    K: float
    components: dict[str, float]
    reason: str | None = None
    params: ExperimentParams | None = None

    @property
    def raw(self) -> float:
        """Unclamped value of the rate formula."""
        return sum(self.components.values())


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def error_correction_factor(mode: ErrorCorrection, x: float) -> float:
    if not 0.0 <= x <= 0.5:
        raise DomainError(f"error rate must be in [0, 0.5], got {x}")
    if mode.kind == "fixed":
        return mode.value
    return ENZER_CONSTANT + ENZER_CUBIC * x**3


def transmittance(L: float, alpha: float) -> float:
    """Fibre transmittance from either party to the mid-point relay, 10^(−αL/20)."""
    if L < 0:
        raise DomainError(f"distance must be non-negative, got {L}")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return 10.0 ** (-alpha * L / 20.0)


def poisson_weight(mu: float, m: int) -> float:
    if not mu > 0 or m < 0:
        raise DomainError(f"need mu > 0 and m >= 0, got mu={mu}, m={m}")
    return poisson_pmf(mu, m)


def totals(table: YieldTable) -> dict[EventType, tuple[float, float]]:
    """Total gain and total bit error per event type.

    Raises DegenerateTotalsError when some type has zero total gain.
    """
    out = {}
    for event in EventType:
        q_tot = 0.0
        err = 0.0
        for _, _, e in table.cells(event):
            q_tot += e.Q
            err += e.Q * e.e_b
        if q_tot <= 0:
            raise DegenerateTotalsError(f"{event.label}: total gain is zero")
        out[event] = (q_tot, min(err / q_tot, 1.0))
    return out


def _totals_one(table: YieldTable, event: EventType) -> tuple[float, float] | None:
    q_tot = err = 0.0
    for _, _, e in table.cells(event):
        q_tot += e.Q
        err += e.Q * e.e_b
    if q_tot <= 0:
        return None
    return q_tot, min(err / q_tot, 1.0)


def key_rate(event: EventType, L: float, params: ExperimentParams, table: YieldTable | None = None) -> KeyRatePoint:
    """Clamped key rate of ``event`` at ``L`` km; builds the yield table when not given."""
    event = EventType(event)
    if table is None:
        table = build_yield_table(params, L)
    comps = {}
    for m, n in PA_PAIRS:
        e = table[(event, m, n)]
        comps[f"pa_{m}{n}"] = e.Q * (1 - binary_entropy(e.e_p))
    tot = _totals_one(table, event)
    if tot is None:
        comps["ec"] = 0.0
        return KeyRatePoint(L, event, 0.0, comps, "zero total gain", params)
    q_tot, e_tot = tot
    if e_tot > 0.5:
        comps["ec"] = -q_tot
        return KeyRatePoint(L, event, 0.0, comps, "total error above 1/2", params)
    comps["ec"] = -q_tot * error_correction_factor(params.fe, e_tot) * binary_entropy(e_tot)
    raw = sum(comps.values())
    if raw <= 0:
        return KeyRatePoint(L, event, 0.0, comps, "error correction exceeds privacy amplification", params)
    return KeyRatePoint(L, event, raw, comps, None, params)
