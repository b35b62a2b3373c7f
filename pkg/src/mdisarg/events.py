"""Announcement conventions shared by the Monte Carlo and the optics model.

Charlie analyzes each output port of the 50:50 beam splitter at ±45°.  A
cross-port coincidence (AT with BR, or BT with AR) heralds the singlet ψ−.
A same-port coincidence (AT with AR, or BT with BR) heralds the state that is
ψ+ in the ±45° basis, which in the H/V computational basis is φ−.

Sifting: Type1 is kept for any k = k′ and Alice flips her bit; Type2 is kept
only for k = k′ ∈ {0, 2} and nobody flips.  With SARG04 signal states these
rules make every kept single-photon pair error free.
"""

from __future__ import annotations

import enum

from .qubit import BELL_STATES, BellOutcome


class EventType(enum.IntEnum):
    TYPE1 = 1
    TYPE2 = 2

    @property
    def label(self) -> str:
        return f"Type{int(self)}"


#: Bell outcome announced as each event type; anything else is a failure.
BELL_TO_TYPE: dict[BellOutcome, EventType] = {
    BellOutcome.PSI_MINUS: EventType.TYPE1,
    BellOutcome.PHI_MINUS: EventType.TYPE2,
}
TYPE_TO_BELL = {t: b for b, t in BELL_TO_TYPE.items()}

KEEP_K: dict[EventType, frozenset[int]] = {
    EventType.TYPE1: frozenset({0, 1, 2, 3}),
    EventType.TYPE2: frozenset({0, 2}),
}
ALICE_FLIPS: dict[EventType, bool] = {EventType.TYPE1: True, EventType.TYPE2: False}


def is_kept(event: EventType | None, k: int, k_prime: int) -> bool:
    return event is not None and k == k_prime and k in KEEP_K[event]


def target_bell_state(event: EventType):
    """Two-qubit state the kept local qubits share in the ideal case."""
    return BELL_STATES[TYPE_TO_BELL[event]]
