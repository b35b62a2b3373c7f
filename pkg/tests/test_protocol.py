import itertools
import math

import numpy as np
import pytest

from mdisarg import protocol
from mdisarg.errors import DomainError
from mdisarg.events import EventType
from mdisarg.protocol import NoiseConfig, RoundRecord, estimate, round_rng, sift_mdi
from mdisarg.qubit import BellOutcome

import oracles


def _rec(kept, bit_a=0, bit_b=0, flipped=False):
    return RoundRecord(0, 0, 0, 0, True, None, None, bit_a if kept else None, bit_b if kept else None, kept, flipped)


def test_estimate_nothing_kept():
    s = estimate([_rec(False)] * 10)
    assert s.rounds_total == 10 and s.rounds_kept == 0 and s.sift_rate == 0
    assert math.isnan(s.qber)


def test_estimate_counts():
    assert estimate([_rec(True, 1, 1)] * 8).qber == 0
    half = [_rec(True, 0, 0), _rec(True, 0, 1)] * 5
    s = estimate(half)
    assert s.qber == 0.5 and s.sift_rate == 1.0
    assert abs(s.stderr_qber - math.sqrt(0.25 / 10)) < 1e-15


def test_estimate_empty():
    with pytest.raises(DomainError):
        estimate([])


def test_noise_domain():
    with pytest.raises(DomainError):
        NoiseConfig(1.5)
    with pytest.raises(DomainError):
        protocol.run_mdi_round(round_rng(0, 0), noise=0.1)


def test_unknown_kind():
    with pytest.raises(DomainError):
        protocol.simulate("bb84", 10, 0)


# Entanglement-based rounds


def test_mismatched_indices_are_discarded():
    for i in range(50):
        rec = protocol.run_entanglement_round(round_rng(1, i), k=0, l=1, k_prime=2, l_prime=1)
        assert not rec.kept and rec.bit_alice is None


def test_matched_ideal_rounds_are_correlated():
    kept = 0
    for i, (k, l) in enumerate(itertools.product(range(4), range(3))):
        for j in range(40):
            rec = protocol.run_entanglement_round(round_rng(i, j), k=k, l=l, k_prime=k, l_prime=l)
            if rec.kept:
                kept += 1
                assert rec.bit_alice == rec.bit_bob and not rec.flipped
    assert kept > 0


def test_entanglement_sift_factorizes():
    # P(k=k')·P(l=l')·P(filter) with filter success 1/4.
    kept, qber = protocol.analytic_entanglement()
    assert abs(kept - (1 / 4) * (1 / 3) * (1 / 4)) < 1e-12
    assert qber < 1e-12


def test_entanglement_depolarized_qber_half():
    n = 100_000
    s = estimate(protocol.simulate("entanglement", n, 11, NoiseConfig(1.0)))
    assert abs(s.qber - 0.5) < 3 * math.sqrt(0.25 / s.rounds_kept)
    ref, _ = protocol.analytic_entanglement(NoiseConfig(1.0))
    assert abs(s.sift_rate - ref) < 3 * math.sqrt(ref * (1 - ref) / n)


# MDI rounds


def test_sift_rules():
    assert sift_mdi(BellOutcome.PSI_MINUS, 3, 3) == (EventType.TYPE1, True, True)
    assert sift_mdi(BellOutcome.PSI_MINUS, 0, 1) == (EventType.TYPE1, False, False)
    assert sift_mdi(BellOutcome.PHI_MINUS, 2, 2) == (EventType.TYPE2, True, False)
    assert sift_mdi(BellOutcome.PHI_MINUS, 1, 1)[1] is False
    assert sift_mdi(BellOutcome.PHI_MINUS, 3, 3)[1] is False
    for failure in (BellOutcome.PSI_PLUS, BellOutcome.PHI_PLUS):
        assert sift_mdi(failure, 0, 0) == (None, False, False)


def _bell_probs_oracle(a, b):
    v = np.kron(a, b)
    return {name: abs(np.vdot(vec, v)) ** 2 for name, vec in oracles.BELL.items()}


def test_type1_matched_round_by_oracle():
    # Bell probabilities of every (bit, bit') for k=k' from independently written states.
    for k in range(4):
        for ba, bb in itertools.product((0, 1), repeat=2):
            pr = _bell_probs_oracle(oracles.sarg_state(ba, k), oracles.sarg_state(bb, k))
            if pr["psi_minus"] > 1e-12:
                assert ba != bb  # after Alice's flip the bits agree
            if pr["phi_minus"] > 1e-12 and k in (0, 2):
                assert ba == bb


def test_forced_type1_round_is_kept_and_flipped():
    found = False
    for i in range(400):
        rec = protocol.run_mdi_round(round_rng(5, i), k=1, k_prime=1)
        if rec.event_type is EventType.TYPE1:
            found = True
            assert rec.kept and rec.flipped
            assert rec.bit_alice ^ 1 == rec.bit_bob
    assert found


def test_type2_with_odd_k_is_discarded():
    seen = False
    for i in range(400):
        rec = protocol.run_mdi_round(round_rng(6, i), k=1, k_prime=1)
        if rec.event_type is EventType.TYPE2:
            seen = True
            assert not rec.kept and rec.bit_alice is None
    assert seen


def test_failure_outcomes_discard_bits():
    for i in range(300):
        rec = protocol.run_mdi_round(round_rng(7, i))
        if rec.event_type is None:
            assert not rec.kept and rec.bit_alice is None and rec.bit_bob is None
        assert rec.flipped == (rec.kept and rec.event_type is EventType.TYPE1)


def _mdi_oracle_sift():
    total = 0.0
    for k, kp, ba, bb in itertools.product(range(4), range(4), (0, 1), (0, 1)):
        pr = _bell_probs_oracle(oracles.sarg_state(ba, k), oracles.sarg_state(bb, kp))
        if k == kp:
            total += pr["psi_minus"] / 64
            if k in (0, 2):
                total += pr["phi_minus"] / 64
    return total


def test_analytic_mdi_matches_oracle():
    kept, qber = protocol.analytic_mdi()
    assert abs(kept - _mdi_oracle_sift()) < 1e-12
    assert abs(kept - 3 / 64) < 1e-12
    assert qber < 1e-12


def test_mdi_depolarized_qber_half():
    kept, qber = protocol.analytic_mdi(NoiseConfig(1.0))
    assert abs(qber - 0.5) < 1e-12


def test_reproducible():
    a = protocol.simulate("mdi", 500, 42)
    b = protocol.simulate("mdi", 500, 42)
    assert a == b
    assert protocol.simulate("mdi", 500, 43) != a


def test_partition_independent():
    whole = protocol.simulate("entanglement", 200, 9)
    parts = [protocol.run_entanglement_round(round_rng(9, i)) for i in range(100, 200)]
    assert whole[100:] == parts
