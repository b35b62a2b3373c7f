"""Single-qubit operators, the Bell basis and projective measurements.

Polarization convention: horizontal |→⟩ is |0_z⟩ and vertical |↑⟩ is |1_z⟩,
so a real amplitude vector ``(cos θ, sin θ)`` is linear polarization at angle
θ and doubles as the photon's Jones vector in :mod:`mdisarg.optics`.  The
X eigenstates |0_x⟩, |1_x⟩ are the +45° and −45° polarizations.

All operators are plain ``numpy`` complex arrays.  Global phases are kept
as computed (``R⁴ = −I``, not ``I``).
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DomainError

TOL = 1e-12

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

KET_0Z = np.array([1, 0], dtype=complex)
KET_1Z = np.array([0, 1], dtype=complex)
KET_0X = (KET_0Z + KET_1Z) / math.sqrt(2)
KET_1X = (KET_0Z - KET_1Z) / math.sqrt(2)

_C4, _S4 = math.cos(math.pi / 4), math.sin(math.pi / 4)
_C8, _S8 = math.cos(math.pi / 8), math.sin(math.pi / 8)

_R = _C4 * IDENTITY - 1j * _S4 * SIGMA_Y
_T = (
    IDENTITY,
    _C4 * IDENTITY - 1j * _S4 * (SIGMA_Z + SIGMA_X) / math.sqrt(2),
    _C4 * IDENTITY - 1j * _S4 * (SIGMA_Z - SIGMA_X) / math.sqrt(2),
)

#: Local filter: non-unitary, eigenvalues sin(π/8) on |0_x⟩ and cos(π/8) on |1_x⟩.
FILTER = _S8 * np.outer(KET_0X, KET_0X.conj()) + _C8 * np.outer(KET_1X, KET_1X.conj())


class BellOutcome(str, enum.Enum):
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"
    PHI_PLUS = "phi_plus"
    PHI_MINUS = "phi_minus"


def _ket2(a: int, b: int) -> np.ndarray:
    return np.kron((KET_0Z, KET_1Z)[a], (KET_0Z, KET_1Z)[b])


BELL_STATES: dict[BellOutcome, np.ndarray] = {
    BellOutcome.PSI_PLUS: (_ket2(0, 1) + _ket2(1, 0)) / math.sqrt(2),
    BellOutcome.PSI_MINUS: (_ket2(0, 1) - _ket2(1, 0)) / math.sqrt(2),
    BellOutcome.PHI_PLUS: (_ket2(0, 0) + _ket2(1, 1)) / math.sqrt(2),
    BellOutcome.PHI_MINUS: (_ket2(0, 0) - _ket2(1, 1)) / math.sqrt(2),
}


def rotation_R(k: int) -> np.ndarray:
    """Return ``R**k`` where R is the π/2 Bloch rotation about Y (k in 0..3)."""
    if k not in (0, 1, 2, 3):
        raise DomainError(f"rotation index k must be in 0..3, got {k!r}")
    return np.linalg.matrix_power(_R, k)


def rotation_T(l: int) -> np.ndarray:
    """Return T_l: identity, or the π/2 rotation about (Z+X) or (Z−X)."""
    if l not in (0, 1, 2):
        raise DomainError(f"axis index l must be in 0..2, got {l!r}")
    return _T[l].copy()


def is_unitary(op: np.ndarray, tol: float = TOL) -> bool:
    return bool(np.allclose(op @ op.conj().T, IDENTITY, rtol=0, atol=tol))


def sarg04_state(bit: int, k: int) -> np.ndarray:
    """SARG04 signal state ``R**k |φ_bit⟩``.

    ``|φ_0⟩ = cos(π/8)|0_x⟩ + sin(π/8)|1_x⟩`` and ``|φ_1⟩`` flips the sign of
    the |1_x⟩ term, i.e. linear polarizations at 22.5° and 67.5°.  The filter
    maps this non-orthogonal pair onto |0_z⟩, |1_z⟩.
    """
    if bit not in (0, 1):
        raise DomainError(f"bit must be 0 or 1, got {bit!r}")
    sign = 1 if bit == 0 else -1
    ref = _C8 * KET_0X + sign * _S8 * KET_1X
    return rotation_R(k) @ ref


def _check_state(state: np.ndarray, dim: int) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.shape != (dim,):
        raise DomainError(f"expected a state vector of length {dim}, got shape {state.shape}")
    return state


def filter_apply(state: np.ndarray) -> tuple[float, np.ndarray]:
    """Apply the local filter to a single-qubit state.

    Returns the success probability ``‖F|ψ⟩‖²`` and the renormalized
    post-filter state.
    """
    state = _check_state(state, 2)
    norm2 = float(np.vdot(state, state).real)
    if norm2 <= 0:
        raise DomainError("cannot filter a zero-norm state")
    out = FILTER @ state
    prob = float(np.vdot(out, out).real) / norm2
    return prob, out / np.linalg.norm(out)


def apply_local(op: np.ndarray, joint: np.ndarray, qubit: int) -> np.ndarray:
    """Apply a one-qubit operator to qubit 0 or 1 of a two-qubit vector."""
    joint = _check_state(joint, 4)
    full = np.kron(op, IDENTITY) if qubit == 0 else np.kron(IDENTITY, op)
    return full @ joint


def bell_project(joint: np.ndarray) -> dict[BellOutcome, float]:
    """Outcome probabilities of a Bell-basis measurement on a normalized pair."""
    joint = _check_state(joint, 4)
    return {b: float(abs(np.vdot(v, joint)) ** 2) for b, v in BELL_STATES.items()}


def measure_z(state: np.ndarray, draw: float) -> int:
    """Z measurement of a normalized qubit driven by one uniform sample in [0, 1)."""
    state = _check_state(state, 2)
    p0 = abs(state[0]) ** 2 / float(np.vdot(state, state).real)
    return 0 if draw < p0 else 1
