import io
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qchain_sim import qsim
from qchain_sim.rng import make_rng


def dense_grover_probabilities(n, marked, k):
    """Build H^n, the oracle and the diffusion as explicit matrices and multiply."""
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    hn = np.array([[1.0]])
    for _ in range(n):
        hn = np.kron(hn, h)
    dim = 2**n
    oracle = np.eye(dim)
    for m in marked:
        oracle[m, m] = -1
    s = np.full((dim, 1), 1 / math.sqrt(dim))
    diffusion = 2 * s @ s.T - np.eye(dim)
    psi = hn @ np.eye(dim)[:, 0]
    for _ in range(k):
        psi = diffusion @ (oracle @ psi)
    return np.abs(psi) ** 2


class TestStates:
    def test_zero_state_n1(self):
        assert np.array_equal(qsim.new_zero_state(1).amplitudes, [1, 0])

    def test_zero_state_n3(self):
        s = qsim.new_zero_state(3)
        assert s.amplitudes.size == 8 and s.amplitudes[0] == 1
        assert s.norm() == 1.0

    @pytest.mark.parametrize("n", [0, 25])
    def test_qubit_cap(self, n):
        with pytest.raises(qsim.QSimError):
            qsim.new_zero_state(n)

    def test_hadamard_all_n2(self):
        s = qsim.apply_hadamard_all(qsim.new_zero_state(2))
        assert np.allclose(s.amplitudes, 0.5, atol=1e-15)

    def test_false_oracle_is_identity(self):
        s = qsim.apply_hadamard_all(qsim.new_zero_state(3))
        before = s.amplitudes.copy()
        qsim.apply_predicate_phase_oracle(s, lambda i: False)
        assert np.array_equal(s.amplitudes, before)

    def test_diffusion_fixes_uniform(self):
        s = qsim.apply_hadamard_all(qsim.new_zero_state(4))
        before = s.amplitudes.copy()
        qsim.apply_diffusion(s)
        assert np.allclose(s.amplitudes, before, atol=1e-12)

    @settings(max_examples=40)
    @given(st.integers(1, 8), st.data())
    def test_oracle_involution_and_norm(self, n, data):
        marked = data.draw(st.sets(st.integers(0, 2**n - 1)))
        ops = data.draw(st.lists(st.sampled_from(["h", "o", "d"]), max_size=12))
        pred = lambda i: i in marked
        s = qsim.new_zero_state(n)
        for op in ops:
            if op == "h":
                qsim.apply_hadamard_all(s)
            elif op == "o":
                qsim.apply_predicate_phase_oracle(s, pred)
            else:
                qsim.apply_diffusion(s)
            assert abs(s.norm() - 1) <= 1e-12
        before = s.amplitudes.copy()
        qsim.apply_predicate_phase_oracle(s, pred)
        qsim.apply_predicate_phase_oracle(s, pred)
        assert np.allclose(s.amplitudes, before, rtol=0, atol=1e-12)

    def test_mask_shape_checked(self):
        with pytest.raises(qsim.QSimError):
            qsim.apply_predicate_phase_oracle(qsim.new_zero_state(2), np.zeros(3, dtype=bool))


class TestGroverFormulas:
    def test_optimal_iterations_examples(self):
        assert qsim.optimal_iterations(4, 1) == 1
        assert qsim.optimal_iterations(8, 1) == 2
        assert qsim.optimal_iterations(16, 16) == 0

    def test_n8_arithmetic(self):
        theta = math.asin(math.sqrt(1 / 8))
        assert theta == pytest.approx(0.36136, abs=1e-5)
        assert math.pi / (4 * theta) - 0.5 == pytest.approx(1.674, abs=1e-3)

    def test_success_probability_examples(self):
        assert qsim.grover_success_probability(4, 1, 1) == pytest.approx(1.0, abs=1e-15)
        assert qsim.grover_success_probability(8, 1, 2) == pytest.approx(0.9453, abs=1e-4)
        assert qsim.grover_success_probability(32, 3, 0) == pytest.approx(3 / 32, abs=1e-15)

    def test_plan(self):
        plan = qsim.GroverPlan(3, 1, 2)
        assert math.sin(plan.theta) ** 2 == pytest.approx(1 / 8)
        assert plan.success_probability == pytest.approx(0.9453, abs=1e-4)
        with pytest.raises(qsim.QSimError):
            qsim.GroverPlan(2, 5, 1)


class TestGroverSearch:
    def test_n2_exact(self, rng):
        idx, mass = qsim.grover_search(2, lambda i: i == 2, 1, rng)
        assert mass == pytest.approx(1.0, abs=1e-12)
        assert idx == 2

    def test_n3_against_dense_matrices(self, rng):
        dense = dense_grover_probabilities(3, [5], 2)
        _, mass = qsim.grover_search(3, lambda i: i == 5, 2, rng)
        assert mass == pytest.approx(dense[5], abs=1e-12)
        assert mass == pytest.approx(0.9453, abs=1e-4)

    @pytest.mark.parametrize("n, marked", [(2, [1]), (4, [0, 9]), (5, [3, 7, 11, 30]), (6, [63])])
    def test_state_matches_dense_oracle(self, n, marked):
        k = qsim.optimal_iterations(2**n, len(marked))
        state, _ = qsim.grover_state(n, lambda i: i in marked, k)
        assert np.allclose(state.probabilities(), dense_grover_probabilities(n, marked, k), atol=1e-12)

    def test_zero_iterations_is_uniform(self, rng):
        _, mass = qsim.grover_search(4, lambda i: i < 3, 0, rng)
        assert mass == pytest.approx(3 / 16, abs=1e-15)

    def test_no_marked_index(self, rng):
        with pytest.raises(qsim.QSimError):
            qsim.grover_search(3, lambda i: False, 1, rng)

    def test_analytic_equivalence_all_k(self):
        for n in range(2, 9):
            for M in (1, 2, 4):
                mask = np.zeros(2**n, dtype=bool)
                mask[make_rng(n * 10 + M).choice(2**n, M, replace=False)] = True
                for k in range(qsim.optimal_iterations(2**n, M) + 1):
                    state, _ = qsim.grover_state(n, mask, k)
                    mass = state.probabilities()[mask].sum()
                    assert abs(mass - qsim.grover_success_probability(2**n, M, k)) <= 1e-9


class TestGhzAndMeasurement:
    def test_ghz_n1(self):
        assert np.allclose(qsim.prepare_ghz(1).amplitudes, [1 / math.sqrt(2)] * 2, atol=1e-15)

    def test_ghz_n3_support(self):
        probs = qsim.prepare_ghz(3).probabilities()
        assert np.flatnonzero(probs).tolist() == [0, 7]
        assert probs[0] == pytest.approx(0.5) and probs[7] == pytest.approx(0.5)

    @pytest.mark.parametrize("n", range(1, 13))
    def test_ghz_two_amplitudes(self, n):
        s = qsim.prepare_ghz(n)
        assert np.count_nonzero(s.amplitudes) == 2
        assert s.amplitudes[0] == pytest.approx(1 / math.sqrt(2))
        assert s.amplitudes[-1] == pytest.approx(1 / math.sqrt(2))
        assert abs(s.norm() - 1) <= 1e-12

    def test_measure_basis_state(self, rng):
        s = qsim.new_zero_state(3)
        s.amplitudes[:] = 0
        s.amplitudes[0b101] = 1
        assert {qsim.measure_all(s, rng) for _ in range(50)} == {"101"}

    def test_ghz5_statistics(self):
        rng = make_rng(55)
        state = qsim.prepare_ghz(5)
        counts = Counter(qsim.measure_all(state, rng) for _ in range(10_000))
        assert set(counts) <= {"00000", "11111"}
        assert abs(counts["11111"] / 10_000 - 0.5) <= 0.02

    def test_measure_deterministic(self):
        s = qsim.prepare_ghz(4)
        a = [qsim.measure_all(s, make_rng(1)) for _ in range(3)]
        assert len(set(a)) == 1

    def test_distribution_csv(self):
        out = io.StringIO()
        qsim.dump_distribution_csv(qsim.prepare_ghz(2), out)
        lines = out.getvalue().splitlines()
        assert lines[0] == "index,probability"
        assert len(lines) == 5
        assert float(lines[1].split(",")[1]) == pytest.approx(0.5)
