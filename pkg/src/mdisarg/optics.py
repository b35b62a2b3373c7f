"""Photon-number-resolved model of Charlie's Bell-measurement station.

Alice's pulse enters beam-splitter input ``a`` and Bob's input ``b``::

    a† → (A† + B†)/√2        b† → (A† − B†)/√2

Each output port is split by a polarizing beam splitter into the +45°
(transmitted, T) and −45° (reflected, R) detectors, giving four threshold
detectors AT, AR, BT, BR.  Every photon independently survives fibre and
detector loss with probability ``p_survive`` and each detector fires a dark
count with probability ``d`` per window.

With ``m`` photons of Jones vector x in ``a`` and ``n`` photons of Jones
vector y in ``b``, the probability that a set S of detectors receives no
photon is a permanent of a Gram matrix with two repeated blocks, which
collapses to

    Σ_j C(m, j) C(n, j) ⟨x'|x⟩_S^(m−j) ⟨y'|y⟩_S^(n−j) (⟨x'|y⟩_S ⟨y'|x⟩_S)^j

where ``⟨·|·⟩_S`` are overlaps restricted to the modes that may still carry
photons.  The same expression with different bra and ket vectors gives
off-diagonal elements of the click POVM, which is all the virtual-qubit
phase-error analysis needs.  Exact click patterns follow by
inclusion–exclusion over silent sets.
"""

from __future__ import annotations

import enum
import functools
import hashlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numpy.polynomial import polynomial as P

from . import qubit
from .errors import CapacityError, DomainError
from .events import KEEP_K, EventType, target_bell_state

MAX_PHOTONS = 64
DEFAULT_N_MAX = 6
#: Pairs whose phase error enters the privacy-amplification terms.
PA_PAIRS = ((1, 1), (1, 2), (2, 1))
TABLE_FORMAT_VERSION = 1


class Detector(enum.IntEnum):
    AT = 0
    AR = 1
    BT = 2
    BR = 3

    @property
    def port(self) -> str:
        return self.name[0]

    @property
    def pol(self) -> str:
        return self.name[1]


ClickPattern = frozenset  # of Detector


def pattern_mask(pattern) -> int:
    return sum(1 << int(d) for d in pattern)


def mask_pattern(mask: int) -> ClickPattern:
    return frozenset(d for d in Detector if mask >> int(d) & 1)


#: Success requires exactly the named pair and silence on the other two detectors.
TYPE_PATTERNS: dict[EventType, tuple[int, int]] = {
    EventType.TYPE1: (
        pattern_mask({Detector.AT, Detector.BR}),
        pattern_mask({Detector.BT, Detector.AR}),
    ),
    EventType.TYPE2: (
        pattern_mask({Detector.AT, Detector.AR}),
        pattern_mask({Detector.BT, Detector.BR}),
    ),
}

_ALL = 0b1111


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _subsets(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def jones(angle: float) -> np.ndarray:
    """Jones vector of linear polarization at ``angle`` radians from horizontal."""
    return np.array([math.cos(angle), math.sin(angle)], dtype=complex)


def output_modes(jones_vec: np.ndarray, side: int) -> np.ndarray:
    """Amplitudes over (AT, AR, BT, BR) of one photon entering input ``side`` (0=a, 1=b)."""
    t = np.vdot(qubit.KET_0X, jones_vec)
    r = np.vdot(qubit.KET_1X, jones_vec)
    s = 1 if side == 0 else -1
    return np.array([t, r, s * t, s * r]) / math.sqrt(2)


def _restricted(u_bra: np.ndarray, u_ket: np.ndarray, mask: int) -> complex:
    sel = [o for o in range(4) if mask >> o & 1]
    return complex(np.sum(u_bra[sel].conj() * u_ket[sel]))


def _check_counts(m: int, n: int) -> None:
    if m < 0 or n < 0 or int(m) != m or int(n) != n:
        raise DomainError(f"photon numbers must be non-negative integers, got ({m}, {n})")
    if m + n > MAX_PHOTONS:
        raise CapacityError(f"m + n = {m + n} exceeds the expansion limit {MAX_PHOTONS}")


def _check_prob(name: str, x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {x}")


@dataclass(frozen=True)
class _Overlaps:
    """Full and per-silent-set overlaps for one (bra, ket) pair of inputs."""

    alpha: complex
    beta: complex
    alpha_s: tuple[complex, ...]
    beta_s: tuple[complex, ...]
    gamma_s: tuple[complex, ...]


def _overlaps(bra_a, bra_b, ket_a, ket_b) -> _Overlaps:
    ua_, ub_ = output_modes(bra_a, 0), output_modes(bra_b, 1)
    ua, ub = output_modes(ket_a, 0), output_modes(ket_b, 1)
    return _Overlaps(
        alpha=complex(np.vdot(bra_a, ket_a)),
        beta=complex(np.vdot(bra_b, ket_b)),
        alpha_s=tuple(_restricted(ua_, ua, s) for s in range(16)),
        beta_s=tuple(_restricted(ub_, ub, s) for s in range(16)),
        gamma_s=tuple(_restricted(ua_, ub, s) * _restricted(ub_, ua, s) for s in range(16)),
    )


def _silent_value(m: int, n: int, ov: _Overlaps, s: int, p: float) -> complex:
    a = ov.alpha - p * ov.alpha_s[s]
    b = ov.beta - p * ov.beta_s[s]
    g = p * p * ov.gamma_s[s]
    return sum(math.comb(m, j) * math.comb(n, j) * a ** (m - j) * b ** (n - j) * g**j for j in range(min(m, n) + 1))


def _patterns_from_photon_exact(photon_exact: Mapping[int, object], dark: float, masks) -> dict[int, object]:
    """Fold independent dark counts into photon-only exact-click terms."""
    out = {}
    for c in masks:
        quiet = (1 - dark) ** (4 - _popcount(c))
        out[c] = sum(photon_exact[cp] * dark ** _popcount(c & ~cp) for cp in _subsets(c)) * quiet
    return out


def click_elements(m: int, n: int, bra, ket, p_survive: float, dark: float) -> np.ndarray:
    """Click-POVM elements ⟨bra|Π_C|ket⟩ for all 16 patterns, indexed by detector bitmask.

    ``bra`` and ``ket`` are (Alice Jones vector, Bob Jones vector) pairs.
    """
    _check_counts(m, n)
    _check_prob("p_survive", p_survive)
    _check_prob("dark", dark)
    ov = _overlaps(bra[0], bra[1], ket[0], ket[1])
    silent = [_silent_value(m, n, ov, s, p_survive) for s in range(16)]
    photon_exact = {
        c: sum((-1) ** _popcount(t) * silent[(_ALL & ~c) | t] for t in _subsets(c)) for c in range(16)
    }
    pats = _patterns_from_photon_exact(photon_exact, dark, range(16))
    return np.array([pats[c] for c in range(16)])


def click_distribution(
    m: int, n: int, pol_a: float, pol_b: float, p_survive: float, d: float
) -> dict[ClickPattern, float]:
    """Exact distribution over the 16 click patterns for Fock inputs (m, n).

    ``pol_a`` and ``pol_b`` are linear polarization angles in radians.
    """
    ket = (jones(pol_a), jones(pol_b))
    elems = click_elements(m, n, ket, ket, p_survive, d)
    return {mask_pattern(c): float(elems[c].real) for c in range(16)}


def type_probability(dist: Mapping[ClickPattern, float], event: EventType) -> float:
    return sum(dist[mask_pattern(c)] for c in TYPE_PATTERNS[event])


# ----------------------------------------------------------------------------------
# Yield model: click-POVM elements as polynomials in p_survive.
# ----------------------------------------------------------------------------------

_TYPE_MASKS = sorted({c for pair in TYPE_PATTERNS.values() for c in pair})


def _silent_poly(m: int, n: int, ov: _Overlaps, s: int) -> np.ndarray:
    a = np.array([ov.alpha, -ov.alpha_s[s]])
    b = np.array([ov.beta, -ov.beta_s[s]])
    g = np.array([0, 0, ov.gamma_s[s]])
    total = np.zeros(m + n + 1, dtype=complex)
    for j in range(min(m, n) + 1):
        term = P.polymul(P.polymul(P.polypow(a, m - j), P.polypow(b, n - j)), P.polypow(g, j))
        term = math.comb(m, j) * math.comb(n, j) * term
        total[: len(term)] += term[: m + n + 1]
    return total


def _photon_exact_polys(m: int, n: int, ov: _Overlaps) -> dict[int, np.ndarray]:
    needed = {cp for c in _TYPE_MASKS for cp in _subsets(c)}
    silent = {}
    out = {}
    for cp in needed:
        poly = np.zeros(m + n + 1, dtype=complex)
        for t in _subsets(cp):
            s = (_ALL & ~cp) | t
            if s not in silent:
                silent[s] = _silent_poly(m, n, ov, s)
            poly += (-1) ** _popcount(t) * silent[s]
        # Every clicking detector needs a surviving photon: lower orders vanish identically.
        poly[: _popcount(cp)] = 0
        out[cp] = poly
    return out


def _bit_pairs():
    return list(itertools.product((0, 1), (0, 1)))


@functools.lru_cache(maxsize=64)
def _cell_polys(m: int, n: int, full: bool) -> dict[tuple[int, int], dict]:
    """Photon-only exact-click polynomials for each k and (bra bits, ket bits).

    Returns ``{(k, bra_index, ket_index): {mask: poly}}``; bits are indexed as
    ``2*bit_a + bit_b``.  Only diagonal entries are produced unless ``full``.
    """
    out = {}
    pairs = _bit_pairs()
    for k in range(4):
        states = [qubit.sarg04_state(b, k) for b in (0, 1)]
        for bi, (ba_, bb_) in enumerate(pairs):
            for ki, (ka, kb) in enumerate(pairs):
                if not full and bi != ki:
                    continue
                if full and bi > ki:
                    continue
                ov = _overlaps(states[ba_], states[bb_], states[ka], states[kb])
                out[(k, bi, ki)] = _photon_exact_polys(m, n, ov)
    return out


def _parity_operator(event: EventType, basis: str) -> tuple[np.ndarray, float]:
    single = qubit.SIGMA_Z if basis == "z" else qubit.SIGMA_X
    op = np.kron(single, single)
    target = target_bell_state(event)
    return op, float(np.vdot(target, op @ target).real)


def _rho_polys(m: int, n: int, event: EventType, dark: float, full: bool) -> np.ndarray:
    """Unnormalized post-selected local two-qubit state as polynomials, shape (4, 4, deg+1).

    Includes the uniform choice of k, k′ (1/16 per matching value) and of both
    bits (1/4), but not the Poisson photon-number weights.
    """
    cells = _cell_polys(m, n, full)
    deg = m + n + 1
    rho = np.zeros((4, 4, deg), dtype=complex)
    for (k, bi, ki), photon_exact in cells.items():
        if k not in KEEP_K[event]:
            continue
        pats = _patterns_from_photon_exact(photon_exact, dark, TYPE_PATTERNS[event])
        elem = sum(pats[c] for c in TYPE_PATTERNS[event]) / 64
        # ρ[ket, bra] = ⟨bra|Π|ket⟩ / 4
        rho[ki, bi] += elem
        if bi != ki:
            rho[bi, ki] += elem.conj()
    return rho


def phase_error_of_state(rho: np.ndarray, event: EventType) -> float:
    """X-basis error of a (possibly unnormalized) local two-qubit state, clamped to [0, 1/2].

    The error is measured against the X-parity of the Bell state heralded by
    ``event``.  A zero-trace state carries no information and gives 1/2.
    """
    rho = np.asarray(rho)
    q = float(np.trace(rho).real)
    if q <= 0:
        return 0.5
    op, target = _parity_operator(event, "x")
    corr = float(np.trace(rho @ op).real) / q
    return min(max((1 - target * corr) / 2, 0.0), 0.5)


def bit_error_of_state(rho: np.ndarray, event: EventType) -> float:
    rho = np.asarray(rho)
    q = float(np.trace(rho).real)
    if q <= 0:
        return 0.5
    op, target = _parity_operator(event, "z")
    corr = float(np.trace(rho @ op).real) / q
    return min(max((1 - target * corr) / 2, 0.0), 1.0)


@dataclass(frozen=True)
class YieldEntry:
    Q: float
    e_b: float
    e_p: float | None = None


@dataclass(frozen=True)
class YieldTable:
    """Joint gains and error rates per (type, m, n) for one operating point."""

    entries: dict[tuple[int, int, int], YieldEntry]
    n_max: int
    params_hash: str
    meta: dict[str, float] = field(default_factory=dict, compare=False)

    def __getitem__(self, key: tuple) -> YieldEntry:
        event, m, n = key
        return self.entries[(int(event), m, n)]

    def cells(self, event: EventType):
        for m in range(self.n_max + 1):
            for n in range(self.n_max + 1):
                yield m, n, self.entries[(int(event), m, n)]

    def to_text(self) -> str:
        lines = [
            f"# yield-table v{TABLE_FORMAT_VERSION}",
            f"# params_hash {self.params_hash}",
            f"# n_max {self.n_max}",
        ]
        lines += [f"# {k} {v!r}" for k, v in sorted(self.meta.items())]
        lines.append("type\tm\tn\tQ\te_b\te_p")
        for (t, m, n), e in sorted(self.entries.items()):
            ep = "" if e.e_p is None else repr(e.e_p)
            lines.append(f"{t}\t{m}\t{n}\t{e.Q!r}\t{e.e_b!r}\t{ep}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "YieldTable":
        header = {}
        entries = {}
        rows = [ln for ln in text.splitlines() if ln.strip()]
        if not rows or rows[0] != f"# yield-table v{TABLE_FORMAT_VERSION}":
            raise DomainError("not a yield table of a supported version")
        for ln in rows[1:]:
            if ln.startswith("#"):
                key, _, value = ln[2:].partition(" ")
                header[key] = value
            elif ln.startswith("type"):
                continue
            else:
                t, m, n, q, eb, ep = (ln.split("\t") + [""])[:6]
                entries[(int(t), int(m), int(n))] = YieldEntry(float(q), float(eb), float(ep) if ep else None)
        meta = {k: float(v) for k, v in header.items() if k not in ("params_hash", "n_max")}
        return cls(entries, int(header["n_max"]), header["params_hash"], meta)


class YieldModel:
    """Per-cell polynomials in ``p_survive`` for a fixed dark-count probability.

    Building the model is the expensive step; evaluating a table at any
    transmittance is a polynomial evaluation, so distance sweeps and bisection
    reuse one model.
    """

    def __init__(self, dark: float, n_max: int = DEFAULT_N_MAX):
        _check_prob("dark", dark)
        if n_max < 2:
            raise DomainError("n_max must be at least 2 so that (1,2) and (2,1) are tabulated")
        _check_counts(n_max, n_max)
        self.dark = dark
        self.n_max = n_max
        self._polys: dict[tuple[int, int, int], tuple[np.ndarray, ...]] = {}
        for event in EventType:
            for m in range(n_max + 1):
                for n in range(n_max + 1):
                    full = (m, n) in PA_PAIRS
                    rho = _rho_polys(m, n, event, dark, full)
                    self._polys[(int(event), m, n)] = (rho, full)

    def state(self, event: EventType, m: int, n: int, p_survive: float) -> np.ndarray:
        """Post-selected local state of one cell (no Poisson weights)."""
        rho, full = self._polys[(int(event), m, n)]
        out = P.polyval(p_survive, rho.transpose(2, 0, 1))
        return out if full else np.diag(np.diag(out))

    def table(self, p_survive: float, mu_a: float, mu_b: float, params_hash: str = "", meta=None) -> YieldTable:
        _check_prob("p_survive", p_survive)
        wa = [poisson_pmf(mu_a, m) for m in range(self.n_max + 1)]
        wb = [poisson_pmf(mu_b, n) for n in range(self.n_max + 1)]
        entries = {}
        for (t, m, n), (rho, full) in self._polys.items():
            event = EventType(t)
            st = self.state(event, m, n, p_survive)
            q_cell = max(float(np.trace(st).real), 0.0)
            e_b = bit_error_of_state(st, event)
            e_p = phase_error_of_state(st, event) if full else None
            entries[(t, m, n)] = YieldEntry(wa[m] * wb[n] * q_cell, e_b, e_p)
        return YieldTable(entries, self.n_max, params_hash, dict(meta or {}))


def poisson_pmf(mu: float, m: int) -> float:
    return math.exp(-mu) * mu**m / math.factorial(m)


@functools.lru_cache(maxsize=32)
def yield_model(dark: float, n_max: int = DEFAULT_N_MAX) -> YieldModel:
    return YieldModel(dark, n_max)


def params_hash(params, L: float) -> str:
    key = repr((params.key(), round(float(L), 12)))
    return hashlib.sha256(key.encode()).hexdigest()[:16]


def _survival(params, L: float) -> float:
    from .keyrate import transmittance

    return params.eta * transmittance(L, params.alpha)


def build_yield_table(params, L: float, n_max: int | None = None) -> YieldTable:
    """Yield table of ``params`` at distance ``L`` km (default cutoff ``params.n_max``)."""
    n_max = params.n_max if n_max is None else n_max
    if n_max < 2:
        raise DomainError("n_max must be at least 2 so that (1,2) and (2,1) are tabulated")
    model = yield_model(params.dark, n_max)
    p = _survival(params, L)
    meta = {"L_km": float(L), "p_survive": p, "mu_a": params.mu_a, "mu_b": params.mu_b, "dark": params.dark}
    return model.table(p, params.mu_a, params.mu_b, params_hash(params, L), meta)


def postselected_state(event: EventType, m: int, n: int, params, L: float) -> np.ndarray:
    """Unnormalized local two-qubit state for cell (m, n), Poisson weights included."""
    if (m, n) not in PA_PAIRS:
        raise DomainError(f"the full local state is only tabulated for {PA_PAIRS}")
    model = yield_model(params.dark, max(params.n_max, 2))
    w = poisson_pmf(params.mu_a, m) * poisson_pmf(params.mu_b, n)
    return w * model.state(event, m, n, _survival(params, L))


def yields_and_bit_error(event: EventType, m: int, n: int, params, L: float) -> tuple[float, float]:
    """Gain Q and bit-error rate e_b of the kept Type-``event`` events from (m, n) photons."""
    _check_counts(m, n)
    model = yield_model(params.dark, max(params.n_max, m, n, 2))
    st = model.state(event, m, n, _survival(params, L))
    w = poisson_pmf(params.mu_a, m) * poisson_pmf(params.mu_b, n)
    return w * max(float(np.trace(st).real), 0.0), bit_error_of_state(st, event)


def phase_error(event: EventType, m: int, n: int, params, L: float) -> float:
    if (m, n) not in PA_PAIRS:
        raise DomainError(f"phase error is only defined for {PA_PAIRS}, got {(m, n)}")
    return phase_error_of_state(postselected_state(event, m, n, params, L), event)
