"""Distance sweeps, cutoff search, intensity optimization and parameter studies."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from . import __version__, protocol
from .errors import BracketExceededError, ConfigError, NoKeyAtOriginError
from .events import EventType
from .keyrate import GYS, ErrorCorrection, ExperimentParams, KeyRatePoint, key_rate
from .optics import build_yield_table

#: Rates at or below this are treated as zero (clamp zero vs. rounding dust).
POSITIVE_THRESHOLD = 1e-12
STUDY_KINDS = ("none", "fe", "dark", "eta")
FORMAT_VERSION = 1


@dataclass(frozen=True)
class SweepConfig:
    L_min: float = 0.0
    L_max: float = 200.0
    L_step: float = 1.0
    params: ExperimentParams = GYS
    types: tuple[EventType, ...] = (EventType.TYPE1, EventType.TYPE2)
    study: str = "none"
    darks: tuple[float, ...] = ()
    etas: tuple[float, ...] = ()
    fe_modes: tuple[ErrorCorrection, ...] = ()
    mu_opt: tuple[float, float, int] | None = None
    seed: int = 0
    mc_rounds: int = 0
    depolarizing: float = 0.0
    tolerance_km: float = 0.1
    out: Path | None = None

    def validate(self) -> "SweepConfig":
        if self.L_min < 0 or not self.L_step > 0 or self.L_max < self.L_min:
            raise ConfigError(f"invalid distance grid {self.L_min}:{self.L_max}:{self.L_step}")
        if not self.types:
            raise ConfigError("at least one event type is required")
        if self.study not in STUDY_KINDS:
            raise ConfigError(f"unknown study {self.study!r}")
        needed = {"fe": self.fe_modes, "dark": self.darks, "eta": self.etas}.get(self.study)
        if needed is not None and not needed:
            raise ConfigError(f"study {self.study!r} needs a non-empty scenario list")
        if self.mu_opt is not None:
            lo, hi, steps = self.mu_opt
            if not (0 < lo <= hi) or steps < 1:
                raise ConfigError(f"invalid intensity grid {self.mu_opt}")
        if not self.tolerance_km > 0:
            raise ConfigError("bisection tolerance must be positive")
        return self

    def distances(self) -> list[float]:
        count = int(math.floor((self.L_max - self.L_min) / self.L_step + 1e-9)) + 1
        return [round(self.L_min + i * self.L_step, 9) for i in range(count)]

    def mu_grid(self) -> list[float]:
        lo, hi, steps = self.mu_opt
        if steps == 1:
            return [lo]
        return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]


@dataclass(frozen=True)
class Scenario:
    label: str
    params: ExperimentParams


def scenarios(config: SweepConfig) -> list[Scenario]:
    base = config.params
    if config.study == "fe":
        return [Scenario(f"fe={m}", dataclasses.replace(base, fe=m)) for m in config.fe_modes]
    if config.study == "dark":
        return [Scenario(f"d={d:g}", dataclasses.replace(base, dark=d)) for d in config.darks]
    if config.study == "eta":
        return [Scenario(f"eta={e:g}", dataclasses.replace(base, eta=e)) for e in config.etas]
    return [Scenario("baseline", base)]


@dataclass(frozen=True)
class CutoffResult:
    L_star: float
    bracket: tuple[float, float]
    tolerance: float
    evaluations: int


@dataclass(frozen=True)
class MuOptimum:
    mu_star: float
    K_star: float
    all_zero: bool = False


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    point: KeyRatePoint
    q_tot: float
    e_tot: float


def _with_mu(params: ExperimentParams, mu: float) -> ExperimentParams:
    return dataclasses.replace(params, mu_a=mu, mu_b=mu)


def optimize_mu(
    params: ExperimentParams,
    L: float,
    grid: Sequence[float],
    event: EventType = EventType.TYPE1,
    rate: Callable[[float], float] | None = None,
) -> MuOptimum:
    """Grid argmax of K over a symmetric intensity; ties go to the smaller μ."""
    if not grid:
        raise ConfigError("intensity grid is empty")
    if any(not mu > 0 for mu in grid):
        raise ConfigError("intensities must be positive")
    if rate is None:
        rate = lambda mu: key_rate(event, L, _with_mu(params, mu)).K  # noqa: E731
    best_mu, best_k = None, -math.inf
    for mu in sorted(grid):
        k = rate(mu)
        if k > best_k:
            best_mu, best_k = mu, k
    if best_k <= POSITIVE_THRESHOLD:
        return MuOptimum(min(grid), 0.0, True)
    return MuOptimum(best_mu, best_k)


def _rows_for(scenario: Scenario, config: SweepConfig) -> list[SweepRow]:
    rows = []
    for L in config.distances():
        if config.mu_opt is None:
            table = build_yield_table(scenario.params, L)
            per_type = {t: (scenario.params, table) for t in config.types}
        else:
            per_type = {}
            for t in config.types:
                best = optimize_mu(scenario.params, L, config.mu_grid(), t)
                p = _with_mu(scenario.params, best.mu_star)
                per_type[t] = (p, build_yield_table(p, L))
        for t in config.types:
            params, table = per_type[t]
            point = key_rate(t, L, params, table)
            q_tot = sum(e.Q for _, _, e in table.cells(t))
            e_tot = sum(e.Q * e.e_b for _, _, e in table.cells(t)) / q_tot if q_tot > 0 else math.nan
            rows.append(SweepRow(scenario.label, point, q_tot, e_tot))
    return rows


def sweep_rows(config: SweepConfig) -> list[SweepRow]:
    config.validate()
    return [row for sc in scenarios(config) for row in _rows_for(sc, config)]


def sweep_distance(config: SweepConfig) -> list[KeyRatePoint]:
    """One point per (scenario, L, type), ordered by scenario, then L, then type."""
    return [row.point for row in sweep_rows(config)]


def cutoff_distance(
    params: ExperimentParams | None,
    event: EventType = EventType.TYPE1,
    tolerance_km: float = 0.1,
    L_min: float = 0.0,
    L_max: float = 200.0,
    rate: Callable[[float], float] | None = None,
) -> CutoffResult:
    """Largest distance with a positive key rate, by scan plus bisection.

    The scan locates the last positive point of a 1 km grid (finer for short
    intervals); bisection then shrinks that bracket to at most twice the
    tolerance and ``L_star`` is its midpoint.
    """
    if not tolerance_km > 0:
        raise ConfigError("tolerance must be positive")
    if rate is None:
        rate = lambda L: key_rate(event, L, params).K  # noqa: E731
    evals = 0

    def positive(L: float) -> bool:
        nonlocal evals
        evals += 1
        return rate(L) > POSITIVE_THRESHOLD

    if not positive(L_min):
        raise NoKeyAtOriginError(f"key rate is zero at L = {L_min} km")
    if positive(L_max):
        raise BracketExceededError(f"key rate is still positive at L = {L_max} km")

    step = min(1.0, (L_max - L_min) / 200)
    n = int(math.ceil((L_max - L_min) / step))
    lo, hi = L_min, L_max
    for i in range(n - 1, 0, -1):
        L = L_min + i * step
        if positive(L):
            lo, hi = L, min(L + step, L_max)
            break
    else:
        hi = min(L_min + step, L_max)
    while hi - lo > 2 * tolerance_km:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return CutoffResult(0.5 * (lo + hi), (lo, hi), tolerance_km, evals)


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.10e}"


def _header(config: SweepConfig, scs: list[Scenario]) -> list[str]:
    p = config.params
    mu_opt = "off" if config.mu_opt is None else "{}:{}:{}".format(*config.mu_opt)
    lines = [
        f"# mdisarg study v{FORMAT_VERSION}",
        f"# tool_version {__version__}",
        f"# study {config.study}",
        f"# eta {p.eta!r}",
        f"# dark {p.dark!r}",
        f"# alpha {p.alpha!r}",
        f"# mu_a {p.mu_a!r}",
        f"# mu_b {p.mu_b!r}",
        f"# fe {p.fe}",
        f"# n_max {p.n_max}",
        f"# L_grid {config.L_min!r}:{config.L_max!r}:{config.L_step!r}",
        f"# types {','.join(str(int(t)) for t in config.types)}",
        f"# mu_opt {mu_opt}",
        f"# tolerance_km {config.tolerance_km!r}",
    ]
    for sc in scs:
        lines.append(f"# scenario {sc.label} eta={sc.params.eta!r} dark={sc.params.dark!r} fe={sc.params.fe}")
    return lines


def _cutoff_line(sc: Scenario, event: EventType, config: SweepConfig) -> str:
    try:
        res = cutoff_distance(sc.params, event, config.tolerance_km, config.L_min, config.L_max)
    except NoKeyAtOriginError:
        return f"# cutoff {sc.label} {event.label} none (no key at L_min)"
    except BracketExceededError:
        return f"# cutoff {sc.label} {event.label} beyond L_max"
    return f"# cutoff {sc.label} {event.label} {res.L_star:.4f} km bracket [{res.bracket[0]:.4f}, {res.bracket[1]:.4f}]"


def render_study(config: SweepConfig, cutoffs: bool = True) -> tuple[str, list[SweepRow]]:
    """Study file text and the rows behind it."""
    config.validate()
    scs = scenarios(config)
    lines = _header(config, scs)
    rows = []
    for sc in scs:
        if cutoffs and config.mu_opt is None:
            lines += [_cutoff_line(sc, t, config) for t in config.types]
        rows += _rows_for(sc, config)
    lines.append("scenario\tL_km\ttype\tK_bps\tK_raw\tQ_tot\te_tot")
    for r in rows:
        pt = r.point
        lines.append(
            f"{r.scenario}\t{pt.L:.6f}\t{int(pt.type)}\t{_fmt(pt.K)}\t{_fmt(pt.raw)}\t{_fmt(r.q_tot)}\t{_fmt(r.e_tot)}"
        )
    return "\n".join(lines) + "\n", rows


def run_study(config: SweepConfig, figure: Path | None = None) -> str:
    """Write the study table to ``config.out`` (when set) and optionally a figure."""
    text, rows = render_study(config)
    if config.out is not None:
        try:
            Path(config.out).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write study file {config.out}: {exc}") from exc
    if figure is not None:
        from .plotting import plot_study

        plot_study(rows, figure, title=f"study: {config.study}")
    return text


@dataclass
class ValidationReport:
    lines: list[str] = field(default_factory=list)
    passed: bool = True

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _z(emp: float, ref: float, se: float) -> float:
    if se == 0:
        return 0.0 if emp == ref else math.inf
    return (emp - ref) / se


def validate_mc(config: SweepConfig, z_limit: float = 4.0) -> ValidationReport:
    """Compare simulated sift rates and QBER against exact enumeration."""
    if config.mc_rounds < 10_000:
        raise ConfigError("validation needs at least 10^4 rounds")
    noise = protocol.NoiseConfig(config.depolarizing)
    report = ValidationReport()
    report.lines += [
        f"# mdisarg mc-validation v{FORMAT_VERSION}",
        f"# tool_version {__version__}",
        f"# rounds {config.mc_rounds}",
        f"# seed {config.seed}",
        f"# depolarizing {config.depolarizing!r}",
        "protocol\tquantity\tempirical\tanalytic\tstderr\tz",
    ]
    analytic = {"mdi": protocol.analytic_mdi, "entanglement": protocol.analytic_entanglement}
    for kind in ("mdi", "entanglement"):
        summ = protocol.estimate(protocol.simulate(kind, config.mc_rounds, config.seed, noise))
        sift_ref, qber_ref = analytic[kind](noise)
        n = summ.rounds_total
        se_sift = math.sqrt(sift_ref * (1 - sift_ref) / n)
        z_sift = _z(summ.sift_rate, sift_ref, se_sift)
        if noise.depolarizing == 0:
            # Ideal channel: every kept round must be error free.
            qber_ref = 0.0
            se_q = 0.0
        else:
            se_q = math.sqrt(qber_ref * (1 - qber_ref) / max(summ.rounds_kept, 1))
        z_q = _z(summ.qber, qber_ref, se_q)
        for name, emp, ref, se, z in (
            ("sift_rate", summ.sift_rate, sift_ref, se_sift, z_sift),
            ("qber", summ.qber, qber_ref, se_q, z_q),
        ):
            report.lines.append(f"{kind}\t{name}\t{emp:.8f}\t{ref:.8f}\t{se:.8f}\t{z:+.4f}")
            if not abs(z) <= z_limit:
                report.passed = False
    report.lines.append(f"# status {'pass' if report.passed else 'FAIL'}")
    return report
