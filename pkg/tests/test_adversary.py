import hashlib
import math

import numpy as np
import pytest

from qchain_sim import adversary as adv
from qchain_sim import chain
from qchain_sim.rng import make_rng


def brute_force_solutions(puzzle):
    count = 0
    for nonce in range(puzzle.space):
        digest = hashlib.sha256(puzzle.template.with_nonce(nonce).encode()).digest()
        count += chain.leading_zero_bits(digest) >= puzzle.difficulty
    return count


class TestOracle:
    def test_t0_marks_everything(self):
        puzzle = adv.make_puzzle(6, 0)
        assert all(adv.pow_oracle(puzzle)(n) for n in range(puzzle.space))
        assert adv.count_solutions(puzzle) == 64

    def test_count_matches_scan(self, golden):
        g = golden["puzzle"]
        puzzle = adv.make_puzzle(g["nonce_bits"], g["difficulty"], timestamp=g["timestamp"])
        assert puzzle.template.encode().hex() == g["header_template"]
        assert adv.count_solutions(puzzle) == g["solutions"] == brute_force_solutions(puzzle)
        # binomial(65536, 1/16): mean 4096, sd ~62
        assert abs(g["solutions"] - 4096) < 5 * 62

    def test_predicate_pure_and_agrees_with_mask(self):
        puzzle = adv.make_puzzle(8, 3, timestamp=11)
        oracle = adv.pow_oracle(puzzle)
        mask = adv.solution_mask(puzzle)
        for nonce in range(puzzle.space):
            assert oracle(nonce) == oracle(nonce) == bool(mask[nonce])

    def test_zero_solutions_not_an_error(self):
        puzzle = adv.make_puzzle(4, 40)
        assert adv.count_solutions(puzzle) == 0
        with pytest.raises(adv.UnsolvablePuzzle):
            adv.grover_mine(puzzle, make_rng(0))

    def test_nonce_bits_cap(self):
        with pytest.raises(adv.AdversaryError):
            adv.make_puzzle(25, 1)

    def test_difficulty_vs_truncation(self):
        template = adv.make_puzzle(4, 1).template
        with pytest.raises(adv.AdversaryError):
            adv.MiningPuzzle(template, 4, 17, truncate_bytes=2)


class TestGroverMine:
    def test_two_bit_exact(self):
        puzzle = adv.find_puzzle_with_solutions(2, 2, 1)
        for seed in range(20):
            result = adv.grover_mine(puzzle, make_rng(seed))
            assert (result.queries, result.samples) == (1, 1)
            assert puzzle.solves(result.nonce)

    def test_returned_nonces_always_solve(self):
        puzzle = adv.make_puzzle(10, 6, timestamp=3)
        rng = make_rng(7)
        for _ in range(200):
            assert adv.pow_oracle(puzzle)(adv.grover_mine(puzzle, rng).nonce)

    def test_expected_queries_monte_carlo(self, golden):
        g = golden["puzzle"]
        puzzle = adv.make_puzzle(g["nonce_bits"], g["difficulty"], timestamp=g["timestamp"])
        rng = make_rng(16, "grover")
        queries = [adv.grover_mine(puzzle, rng).queries for _ in range(1000)]
        expected = math.pi / 4 * math.sqrt(2**16 / g["solutions"])
        assert abs(np.mean(queries) / expected - 1) < 0.10

    def test_deterministic(self):
        puzzle = adv.make_puzzle(8, 5)
        a = [adv.grover_mine(puzzle, make_rng(4)) for _ in range(2)]
        assert a[0] == a[1]

    def test_classical_mine_counts_draws(self):
        puzzle = adv.make_puzzle(6, 0)
        result = adv.classical_mine(puzzle, make_rng(1))
        assert result.queries == 1


class TestExpectedQueries:
    def test_n256(self):
        assert adv.expected_queries("classical", 256, 1) == 256
        assert adv.expected_queries("grover", 256, 1) == pytest.approx(12.566, abs=1e-3)

    def test_m_equals_n(self):
        assert adv.expected_queries("classical", 64, 64) == 1
        assert adv.expected_queries("grover", 64, 64) == pytest.approx(math.pi / 4)

    @pytest.mark.parametrize("N", [16, 256, 4096])
    def test_ratio_scaling(self, N):
        ratio = adv.expected_queries("grover", N, 1) / adv.expected_queries("classical", N, 1)
        assert ratio == pytest.approx(math.pi / 4 / math.sqrt(N))

    def test_cross_check_by_mining(self):
        # classical Monte Carlo attempts should track N/M on a one-solution puzzle
        puzzle = adv.find_puzzle_with_solutions(8, 8, 1)
        rng = make_rng(256)
        attempts = [adv.classical_mine(puzzle, rng).queries for _ in range(4000)]
        assert abs(np.mean(attempts) / 256 - 1) < 0.05

    def test_bad_inputs(self):
        with pytest.raises(adv.AdversaryError):
            adv.expected_queries("grover", 8, 0)
        with pytest.raises(adv.AdversaryError):
            adv.expected_queries("psychic", 8, 1)


class TestRace:
    def test_catchup_examples(self):
        assert adv.catchup_probability(0.5, 10) == 1.0
        assert adv.catchup_probability(0.3, 2) == pytest.approx((3 / 7) ** 2)
        assert adv.catchup_probability(0.3, 2) == pytest.approx(0.1837, abs=1e-4)
        assert adv.catchup_probability(0.2, 0) == 1.0

    def test_classical_race_matches(self):
        freq = adv.simulate_race(adv.RaceConfig(0.3, 2, trials=100_000), make_rng(30))
        assert abs(freq - 0.1837) <= 0.02

    def test_grover_share(self):
        cfg = adv.RaceConfig(0.5, 6, "grover", trials=10_000, difficulty=16)
        # T_a = (pi/4) 2^8 queries per block, T_h = 2^16
        t_a, t_h = math.pi / 4 * 2**8, 2**16
        assert adv.effective_share(cfg) == pytest.approx(t_h / (t_a + t_h))
        assert adv.effective_share(cfg) > 0.5
        assert adv.simulate_race(cfg, make_rng(1)) > 0.99

    def test_classical_share_is_q(self):
        assert adv.effective_share(adv.RaceConfig(0.37, 3)) == 0.37

    def test_weak_attacker(self):
        freq = adv.simulate_race(adv.RaceConfig(0.01, 6, trials=100_000), make_rng(2))
        assert freq <= 0.001

    def test_deterministic(self):
        cfg = adv.RaceConfig(0.4, 3, trials=5000)
        assert adv.simulate_race(cfg, make_rng(9)) == adv.simulate_race(cfg, make_rng(9))

    def test_config_validation(self):
        with pytest.raises(adv.AdversaryError):
            adv.RaceConfig(1.0, 1)
        with pytest.raises(adv.AdversaryError):
            adv.RaceConfig(0.3, 5, lead_cap=5)
        with pytest.raises(adv.AdversaryError):
            adv.RaceConfig(0.3, 1, attacker_kind="quantum-annealer")


@pytest.fixture(scope="module")
def keypair():
    rng = make_rng(77)
    return adv.toy_keygen(adv.toy_group(24, rng), rng)


class TestSignatures:
    def test_complete(self, keypair):
        rng = make_rng(1)
        for _ in range(1000):
            msg = rng.bytes(int(rng.integers(0, 40)))
            sig = adv.toy_sign(keypair, msg, rng)
            assert adv.toy_verify(keypair.group, keypair.public, msg, sig)

    def test_single_bit_perturbations(self, keypair):
        rng = make_rng(2)
        msg = b"transfer 5 coins"
        sig = adv.toy_sign(keypair, msg, rng)
        for bit in range(8 * len(msg)):
            bad = bytearray(msg)
            bad[bit // 8] ^= 1 << (bit % 8)
            assert not adv.toy_verify(keypair.group, keypair.public, bytes(bad), sig)
        for bit in range(8 * len(sig)):
            bad = bytearray(sig)
            bad[bit // 8] ^= 1 << (bit % 8)
            assert not adv.toy_verify(keypair.group, keypair.public, msg, bytes(bad))
        for bit in range(keypair.group.p.bit_length()):
            assert not adv.toy_verify(keypair.group, keypair.public ^ (1 << bit), msg, sig)

    def test_random_forgeries_fail(self):
        rng = make_rng(3)
        group = adv.toy_group(31, rng)
        kp = adv.toy_keygen(group, rng)
        msg = b"pay mallory"
        hits = sum(adv.toy_verify(group, kp.public, msg, rng.bytes(8)) for _ in range(10_000))
        assert hits == 0

    def test_golden_signature(self, golden):
        g = golden["signature"]
        group = adv.ToyGroup(g["p"], g["g"])
        kp = adv.ToyKeypair(group, g["private"])
        assert kp.public == g["public"]
        sig = adv.toy_sign(kp, bytes.fromhex(g["message"]), make_rng(g["seed"], g["rng_label"]))
        assert sig.hex() == g["signature"]
        assert adv.toy_verify(group, kp.public, bytes.fromhex(g["message"]), sig)

    def test_keypair_range(self):
        group = adv.ToyGroup(23, 5)
        with pytest.raises(adv.AdversaryError):
            adv.ToyKeypair(group, 0)
        with pytest.raises(adv.AdversaryError):
            adv.ToyKeypair(group, 22)


class TestBreakKey:
    def test_p23(self):
        group = adv.ToyGroup(23, 5)
        brute = [x for x in range(22) if pow(5, x, 23) == 8]
        result = adv.break_key(8, group)
        assert pow(5, result.private, 23) == 8
        assert [result.private] == brute

    def test_identity_public(self):
        assert adv.break_key(1, adv.ToyGroup(23, 5)).private == 0

    def test_recovered_key_signs(self):
        rng = make_rng(4)
        group = adv.toy_group(20, rng)
        victim = adv.toy_keygen(group, rng)
        stolen = adv.ToyKeypair(group, adv.break_key(victim.public, group).private)
        msg = b"victim pays attacker"
        assert adv.toy_verify(group, victim.public, msg, adv.toy_sign(stolen, msg, rng))

    def test_full_exponent_range(self):
        group = adv.ToyGroup(101, 2)
        for x in range(100):
            assert adv.break_key(pow(2, x, 101), group).private == x

    def test_32_bit_modulus(self):
        rng = make_rng(32)
        group = adv.toy_group(32, rng)
        kp = adv.toy_keygen(group, rng)
        assert adv.break_key(kp.public, group).private == kp.private


class TestThreatReport:
    def test_datapoint_verbatim(self):
        report = adv.threat_report()
        assert report == {
            "shor_resource_estimate": {"target": "RSA-2048", "hours": 8, "noisy_qubits": 20_000_000}
        }

    def test_measured_ratio_included(self):
        report = adv.threat_report({"grover_classical_ratio": 0.024})
        assert report["measured"]["grover_classical_ratio"] == 0.024
        assert report["shor_resource_estimate"]["hours"] == 8
