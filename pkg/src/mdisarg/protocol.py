"""Monte Carlo of the SARG04 protocol rounds and their sifting.

Two round generators share one record type:

* :func:`run_entanglement_round`: Alice keeps one qubit of the SARG04
  source state, rotates the other by ``T_l R^k``; Bob undoes
  ``T_l' R^k'``, filters, and both measure Z.
* :func:`run_mdi_round`: each party sends ``R^k |φ_bit⟩`` to Charlie, who
  performs a Bell measurement; the announcement is sifted with
  :mod:`mdisarg.events`.  The l index and the filter do not appear in the MDI
  announcements and are not simulated there.

Randomness for round ``i`` comes only from ``round_rng(seed, i)``, so any
partition of the rounds over workers reproduces the same records.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import qubit
from .errors import DomainError
from .events import ALICE_FLIPS, BELL_TO_TYPE, EventType, is_kept
from .qubit import BellOutcome

_OUTCOMES = tuple(BellOutcome)


@dataclass(frozen=True)
class NoiseConfig:
    """Depolarizing probability applied independently to each travelling qubit."""

    depolarizing: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.depolarizing <= 1.0:
            raise DomainError(f"depolarizing probability must be in [0, 1], got {self.depolarizing}")


@dataclass(frozen=True)
class RoundRecord:
    k: int
    l: int
    k_prime: int
    l_prime: int
    filter_success: bool
    charlie_outcome: BellOutcome | None
    event_type: EventType | None
    bit_alice: int | None
    bit_bob: int | None
    kept: bool
    flipped: bool

    @property
    def error(self) -> bool | None:
        """Whether the kept bits violate ``bit_alice ⊕ flipped = bit_bob``."""
        if not self.kept:
            return None
        return (self.bit_alice ^ int(self.flipped)) != self.bit_bob


@dataclass(frozen=True)
class McSummary:
    rounds_total: int
    rounds_kept: int
    sift_rate: float
    qber: float
    stderr_qber: float


def round_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng((seed, index))


def _source_state() -> np.ndarray:
    """(|0⟩|φ_0⟩ + |1⟩|φ_1⟩)/√2, Alice's qubit first."""
    return sum(np.kron((qubit.KET_0Z, qubit.KET_1Z)[j], qubit.sarg04_state(j, 0)) for j in (0, 1)) / math.sqrt(2)


_SOURCE = _source_state()


# Probabilities below this are rounding residue of exact zeros.
_DUST = 1e-14


def _sample(probs: Sequence[float], draw: float) -> int:
    acc = 0.0
    for i, p in enumerate(probs):
        if p < _DUST:
            continue
        acc += p
        if draw < acc:
            return i
    return len(probs) - 1


@functools.lru_cache(maxsize=None)
def _bob_ops(k: int, l: int) -> tuple[np.ndarray, np.ndarray]:
    """Two-qubit forms of Alice's rotation T_l R^k and Bob's filtered undo."""
    rot = qubit.rotation_T(l) @ qubit.rotation_R(k)
    return np.kron(qubit.IDENTITY, rot), np.kron(qubit.IDENTITY, qubit.FILTER @ rot.conj().T)


def run_entanglement_round(
    rng: np.random.Generator,
    noise: NoiseConfig = NoiseConfig(),
    *,
    k: int | None = None,
    l: int | None = None,
    k_prime: int | None = None,
    l_prime: int | None = None,
) -> RoundRecord:
    if not isinstance(noise, NoiseConfig):
        raise DomainError("noise must be a NoiseConfig")
    draws = rng.random(7)
    k = int(draws[0] * 4) if k is None else k
    l = int(draws[1] * 3) if l is None else l
    k_prime = int(draws[2] * 4) if k_prime is None else k_prime
    l_prime = int(draws[3] * 3) if l_prime is None else l_prime
    extra = rng.random(3)

    state = _bob_ops(k, l)[0] @ _SOURCE
    if draws[4] < noise.depolarizing:
        # Fully mixed travelling qubit: Alice's Z marginal is untouched, Bob's qubit is random.
        amps = state.reshape(2, 2)
        p_a0 = float(np.sum(abs(amps[0]) ** 2))
        a = 0 if extra[0] < p_a0 else 1
        b = 0 if extra[1] < 0.5 else 1
        state = np.kron((qubit.KET_0Z, qubit.KET_1Z)[a], (qubit.KET_0Z, qubit.KET_1Z)[b])

    filtered = _bob_ops(k_prime, l_prime)[1] @ state
    p_success = float(np.vdot(filtered, filtered).real)
    success = bool(draws[5] < p_success)

    matched = k == k_prime and l == l_prime
    kept = matched and success
    bit_a = bit_b = None
    if kept:
        outcome = _sample(abs(filtered) ** 2 / p_success, draws[6])
        bit_a, bit_b = divmod(outcome, 2)
    return RoundRecord(k, l, k_prime, l_prime, success, None, None, bit_a, bit_b, kept, False)


def sift_mdi(outcome: BellOutcome, k: int, k_prime: int) -> tuple[EventType | None, bool, bool]:
    """Announced event type, keep decision and Alice's flip for one MDI round."""
    event = BELL_TO_TYPE.get(outcome)
    kept = is_kept(event, k, k_prime)
    return event, kept, kept and ALICE_FLIPS[event]


@functools.lru_cache(maxsize=None)
def _bell_probs(sent_a: tuple, sent_b: tuple) -> tuple[float, ...]:
    probs = qubit.bell_project(np.kron(_travel_state(*sent_a), _travel_state(*sent_b)))
    return tuple(probs[o] for o in _OUTCOMES)


def _travel_state(kind: str, value: int, k: int) -> np.ndarray:
    if kind == "z":
        return (qubit.KET_0Z, qubit.KET_1Z)[value]
    return qubit.sarg04_state(value, k)


def run_mdi_round(
    rng: np.random.Generator,
    noise: NoiseConfig = NoiseConfig(),
    *,
    k: int | None = None,
    k_prime: int | None = None,
    bits: tuple[int, int] | None = None,
) -> RoundRecord:
    if not isinstance(noise, NoiseConfig):
        raise DomainError("noise must be a NoiseConfig")
    draws = rng.random(9)
    k = int(draws[0] * 4) if k is None else k
    k_prime = int(draws[1] * 4) if k_prime is None else k_prime
    if bits is None:
        bits = (int(draws[2] < 0.5), int(draws[3] < 0.5))
    bit_a, bit_b = bits

    sent_a = ("z", int(draws[5] < 0.5), 0) if draws[4] < noise.depolarizing else ("s", bit_a, k)
    sent_b = ("z", int(draws[7] < 0.5), 0) if draws[6] < noise.depolarizing else ("s", bit_b, k_prime)
    outcome = _OUTCOMES[_sample(_bell_probs(sent_a, sent_b), draws[8])]

    event, kept, flipped = sift_mdi(outcome, k, k_prime)
    if not kept:
        bit_a = bit_b = None
    return RoundRecord(k, 0, k_prime, 0, True, outcome, event, bit_a, bit_b, kept, flipped)


def simulate(kind: str, rounds: int, seed: int, noise: NoiseConfig = NoiseConfig()) -> list[RoundRecord]:
    """Run ``rounds`` independent rounds of ``kind`` ("mdi" or "entanglement")."""
    runner = {"mdi": run_mdi_round, "entanglement": run_entanglement_round}.get(kind)
    if runner is None:
        raise DomainError(f"unknown protocol kind {kind!r}")
    return [runner(round_rng(seed, i), noise) for i in range(rounds)]


def estimate(records: Iterable[RoundRecord]) -> McSummary:
    total = kept = errors = 0
    for rec in records:
        total += 1
        if rec.kept:
            kept += 1
            errors += rec.error
    if total == 0:
        raise DomainError("cannot summarize an empty sequence of rounds")
    if kept == 0:
        return McSummary(total, 0, 0.0, math.nan, math.nan)
    q = errors / kept
    return McSummary(total, kept, kept / total, q, math.sqrt(q * (1 - q) / kept))


# Exact expectations by enumeration -------------------------------------------------


def analytic_mdi(noise: NoiseConfig = NoiseConfig()) -> tuple[float, float]:
    """Kept fraction and conditional QBER of :func:`run_mdi_round`, by enumeration."""
    p = noise.depolarizing

    def branches(bit, k):
        out = [((("s", bit, k)), 1 - p)]
        if p > 0:
            out += [(("z", z, 0), p / 2) for z in (0, 1)]
        return out

    kept = err = 0.0
    for k, k_prime, bit_a, bit_b in itertools.product(range(4), range(4), (0, 1), (0, 1)):
        w = 1 / 64
        for sent_a, wa in branches(bit_a, k):
            for sent_b, wb in branches(bit_b, k_prime):
                for outcome, prob in zip(_OUTCOMES, _bell_probs(sent_a, sent_b)):
                    _, keep, flip = sift_mdi(outcome, k, k_prime)
                    if keep:
                        mass = w * wa * wb * prob
                        kept += mass
                        if (bit_a ^ flip) != bit_b:
                            err += mass
    return kept, (err / kept if kept > 0 else math.nan)


def analytic_entanglement(noise: NoiseConfig = NoiseConfig()) -> tuple[float, float]:
    """Kept fraction and conditional QBER of :func:`run_entanglement_round`."""
    p = noise.depolarizing
    kept = err = 0.0
    for k, l in itertools.product(range(4), range(3)):
        # Only matched index pairs (probability 1/12) can be kept.
        w = 1 / 12 / 12
        state = qubit.apply_local(qubit.rotation_T(l) @ qubit.rotation_R(k), _SOURCE, 1)
        cases = [(state, 1 - p)]
        if p > 0:
            p_a0 = float(np.sum(abs(state.reshape(2, 2)[0]) ** 2))
            for a, b in itertools.product((0, 1), (0, 1)):
                pa = p_a0 if a == 0 else 1 - p_a0
                ket = np.kron((qubit.KET_0Z, qubit.KET_1Z)[a], (qubit.KET_0Z, qubit.KET_1Z)[b])
                cases.append((ket, p * pa / 2))
        undo = (qubit.rotation_T(l) @ qubit.rotation_R(k)).conj().T
        for psi, wc in cases:
            filtered = qubit.apply_local(qubit.FILTER, qubit.apply_local(undo, psi, 1), 1)
            probs = abs(filtered) ** 2
            kept += w * wc * probs.sum()
            err += w * wc * (probs[1] + probs[2])
    return kept, (err / kept if kept > 0 else math.nan)
