import numpy as np
import pytest

import oracles
import properties
from slimrnn.dynamics import (CellState, InitScheme, Parameters, backward_sequence,
                              clone_with_zeroed_input_weights, forward_sequence, forward_step,
                              init_params, param_layout)
from slimrnn.errors import ContractViolation, NumericFault
from slimrnn.gradcheck import numeric_gradient
from slimrnn.taxonomy import VARIANT_NAMES, param_count, variant_config

LSTM = variant_config("LSTM")

# pure-Python oracle on init_params(LSTM, 2, 2, seed=42), x = (1, -1), zero state
SEED42_C = [0.06009929887248595, 0.5434734862964784]
SEED42_H = [0.03335903886673741, 0.23386591889242486]
SEED42_I = [0.47139366882722133, 0.6495465722727303]
SEED42_F = [0.7432948675384705, 0.7882435661376028]
SEED42_O = [0.5557334824595253, 0.4718722700786161]


def random_inputs(seed, T, m, scale=1.0):
    return list(np.random.default_rng(seed).uniform(-scale, scale, size=(T, m)))


class TestForwardStep:
    def test_seed42_frozen(self):
        params = init_params(LSTM, 2, 2, seed=42)
        state, cache = forward_step(LSTM, params, np.array([1.0, -1.0]), CellState.zeros(2))
        np.testing.assert_allclose(state.c, SEED42_C, rtol=1e-14)
        np.testing.assert_allclose(state.h, SEED42_H, rtol=1e-14)
        np.testing.assert_allclose(cache.gates["i"], SEED42_I, rtol=1e-14)
        np.testing.assert_allclose(cache.gates["f"], SEED42_F, rtol=1e-14)
        np.testing.assert_allclose(cache.gates["o"], SEED42_O, rtol=1e-14)

    def test_seed42_oracle_live(self):
        params = init_params(LSTM, 2, 2, seed=42)
        c, h, _ = oracles.lstm_step(oracles.tolist(params.arrays), [1.0, -1.0], [0.0] * 2, [0.0] * 2)
        np.testing.assert_allclose(c, SEED42_C, rtol=1e-14)
        np.testing.assert_allclose(h, SEED42_H, rtol=1e-14)

    def test_zero_params_zero_output(self):
        params = init_params(LSTM, 3, 2, scheme=InitScheme.ZERO)
        state, _ = forward_step(LSTM, params, np.array([5.0, -3.0]), CellState.zeros(3))
        np.testing.assert_array_equal(state.h, np.zeros(3))

    def test_lstm6_constant_forget(self):
        cfg = variant_config("LSTM_6", alpha=0.9)
        params = init_params(cfg, 2, 1, scheme=InitScheme.ZERO)
        state = CellState(np.ones(2), np.zeros(2))
        new, _ = forward_step(cfg, params, np.zeros(1), state)
        np.testing.assert_array_equal(new.c, [0.9, 0.9])
        np.testing.assert_array_equal(new.h, np.tanh([0.9, 0.9]))

    def test_shape_mismatch(self):
        params = init_params(LSTM, 2, 2)
        with pytest.raises(ContractViolation):
            forward_step(LSTM, params, np.zeros(3), CellState.zeros(2))

    def test_non_finite_reports_timestep(self):
        cfg = variant_config("LSTM_6b", alpha=1.0)
        params = init_params(cfg, 1, 1, scheme=InitScheme.ZERO)
        params["W_c"] = 1e308
        with pytest.raises(NumericFault) as info:
            forward_sequence(cfg, params, [np.ones(1)] * 5)
        assert info.value.timestep == 1

    def test_batch_rows_match_single(self):
        cfg = variant_config("LSTM_C5")
        params = init_params(cfg, 4, 3, seed=3, scheme=InitScheme.RANDOM)
        xs = np.random.default_rng(0).uniform(-1, 1, size=(6, 5, 3))
        batched = forward_sequence(cfg, params, list(xs))[0]
        for b in range(5):
            single = forward_sequence(cfg, params, list(xs[:, b]))[0]
            np.testing.assert_allclose(batched[-1].h[b], single[-1].h, rtol=1e-14, atol=1e-15)


class TestForwardSequenceOracles:
    def test_length_one_is_one_step(self):
        params = init_params(LSTM, 3, 2, seed=1)
        x = np.array([0.3, -0.7])
        states, _ = forward_sequence(LSTM, params, [x])
        state, _ = forward_step(LSTM, params, x, CellState.zeros(3))
        assert states[0].h.tobytes() == state.h.tobytes()

    def test_lstm_random_sequence(self):
        params = init_params(LSTM, 3, 2, seed=5, scheme=InitScheme.RANDOM)
        xs = random_inputs(1, 7, 2)
        expected = oracles.run(lambda P, x, c, h: oracles.lstm_step(P, x, c, h),
                               oracles.tolist(params.arrays), xs, 3)
        np.testing.assert_allclose(properties.hs(LSTM, params, xs), expected, rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("name, step", [("LSTM_4i", oracles.lstm_4i_step),
                                            ("LSTM_C5ib", oracles.lstm_c5ib_step),
                                            ("LSTM_6b", oracles.lstm_6b_step)])
    def test_variant_against_oracle(self, name, step):
        cfg = variant_config(name, alpha=0.9)
        params = init_params(cfg, 3, 2, seed=9, scheme=InitScheme.RANDOM)
        xs = random_inputs(2, 5, 2)
        expected = oracles.run(step, oracles.tolist(params.arrays), xs, 3, 0.9)
        np.testing.assert_allclose(properties.hs(cfg, params, xs), expected, rtol=1e-13, atol=1e-15)

    def test_empty_sequence(self):
        with pytest.raises(ContractViolation):
            forward_sequence(LSTM, init_params(LSTM, 2, 2), [])


class TestEquivalences:
    @pytest.mark.parametrize("seed", range(3))
    def test_e1(self, seed):
        assert properties.e1(seed)

    @pytest.mark.parametrize("seed", range(3))
    def test_e2(self, seed):
        assert properties.e2(seed)

    @pytest.mark.parametrize("seed", range(3))
    def test_e3(self, seed):
        assert properties.e3(seed) <= 1e-12


class TestBIBO:
    @pytest.mark.parametrize("name", properties.CONSTANT_FORGET + properties.CONSTANT_FORGET_B)
    def test_bounded(self, name):
        assert properties.bibo_trial(name, seed=100, batch=4, T=200) <= 1.0


class TestBackward:
    def test_zero_upstream_zero_grads(self):
        params = init_params(LSTM, 3, 2, seed=1)
        _, caches = forward_sequence(LSTM, params, random_inputs(0, 4, 2))
        grads, dxs = backward_sequence(LSTM, params, caches, [np.zeros(3)] * 4)
        assert all(not np.any(v) for v in grads.arrays.values())
        assert all(not np.any(d) for d in dxs)

    def test_length_mismatch(self):
        params = init_params(LSTM, 2, 2)
        _, caches = forward_sequence(LSTM, params, random_inputs(0, 3, 2))
        with pytest.raises(ContractViolation):
            backward_sequence(LSTM, params, caches, [np.zeros(2)] * 2)

    def test_single_step_h0_loss(self):
        params = init_params(LSTM, 3, 2, seed=4, scheme=InitScheme.RANDOM)
        xs = random_inputs(3, 1, 2)
        _, caches = forward_sequence(LSTM, params, xs)
        grads, _ = backward_sequence(LSTM, params, caches, [np.array([1.0, 0.0, 0.0])])

        def loss(p):
            return forward_sequence(LSTM, p, xs)[0][0].h[0]

        eps = 1e-5
        for name in params.names:
            arr = params[name]
            for idx in np.ndindex(arr.shape):
                plus, minus = params.copy(), params.copy()
                plus[name][idx] += eps
                minus[name][idx] -= eps
                fd = (loss(plus) - loss(minus)) / (2 * eps)
                a = grads[name][idx]
                assert abs(a - fd) / max(abs(a), abs(fd), 1e-8) < 1e-5, (name, idx)

    def test_constant_gates_get_no_gradient_entries(self):
        cfg = variant_config("LSTM_C6b")
        params = init_params(cfg, 2, 2, seed=1)
        _, caches = forward_sequence(cfg, params, random_inputs(0, 3, 2))
        grads, _ = backward_sequence(cfg, params, caches, [np.ones(2)] * 3)
        assert grads.names == ["W_c", "u_c", "b_c"]

    def test_batch_gradient_is_sum_of_rows(self):
        cfg = variant_config("LSTM_5")
        params = init_params(cfg, 3, 2, seed=2, scheme=InitScheme.RANDOM)
        xs = np.random.default_rng(1).uniform(-1, 1, size=(4, 2, 2))
        _, caches = forward_sequence(cfg, params, list(xs))
        total, _ = backward_sequence(cfg, params, caches, [np.ones((2, 3))] * 4)
        rows = []
        for b in range(2):
            _, c = forward_sequence(cfg, params, list(xs[:, b]))
            rows.append(backward_sequence(cfg, params, c, [np.ones(3)] * 4)[0])
        for name in params.names:
            np.testing.assert_allclose(total[name], rows[0][name] + rows[1][name], rtol=1e-13, atol=1e-15)

    def test_deterministic(self):
        cfg = variant_config("CELL_2")
        params = init_params(cfg, 4, 3, seed=8, scheme=InitScheme.RANDOM)
        xs = random_inputs(4, 6, 3)
        outs = []
        for _ in range(2):
            states, caches = forward_sequence(cfg, params, xs)
            grads, dxs = backward_sequence(cfg, params, caches, [s.h for s in states])
            outs.append(grads.flat().tobytes() + np.stack(dxs).tobytes())
        assert outs[0] == outs[1]

    def test_c5ib_all_groups_match_numeric(self):
        cfg = variant_config("LSTM_C5ib")
        params = init_params(cfg, 3, 2, seed=6, scheme=InitScheme.RANDOM)
        xs = random_inputs(6, 5, 2)
        states, caches = forward_sequence(cfg, params, xs)
        grads, _ = backward_sequence(cfg, params, caches, [2 * s.h for s in states])
        numeric = numeric_gradient(cfg, params, xs, "sum_squares", targets=[np.zeros(3)] * 5)
        for name in params.names:
            np.testing.assert_allclose(grads[name], numeric[name], rtol=1e-6, atol=1e-10)


class TestInit:
    def test_layout_sizes_match_count(self):
        for name in VARIANT_NAMES:
            cfg = variant_config(name)
            params = init_params(cfg, 5, 3, seed=0)
            assert params.size == param_count(cfg, 5, 3)
            assert params.names == [k for k, _ in param_layout(cfg, 5, 3)]

    def test_lstm3_allocation(self):
        params = init_params(variant_config("LSTM_3"), 4, 2)
        assert params.names == ["b_i", "b_f", "b_o", "W_c", "U_c", "b_c"]
        np.testing.assert_array_equal(params["b_f"], np.ones(4))

    def test_zero_scheme(self):
        params = init_params(LSTM, 3, 2, seed=9, scheme=InitScheme.ZERO)
        assert not np.any(params.flat())

    def test_deterministic_by_seed(self):
        a = init_params(LSTM, 4, 3, seed=11)
        assert a.equal(init_params(LSTM, 4, 3, seed=11))
        assert not a.equal(init_params(LSTM, 4, 3, seed=12))

    def test_uniform_range(self):
        params = init_params(LSTM, 16, 4, seed=0)
        assert np.max(np.abs(params["W_i"])) <= 0.5
        assert np.max(np.abs(params["U_i"])) <= 0.25

    def test_bad_dims(self):
        with pytest.raises(ContractViolation):
            init_params(LSTM, 0, 2)


class TestCloneZeroed:
    def test_zeroes_gate_inputs_only(self):
        params = init_params(LSTM, 3, 2, seed=1, scheme=InitScheme.RANDOM)
        out = clone_with_zeroed_input_weights(LSTM, params)
        for role in "ifo":
            assert not np.any(out[f"W_{role}"])
        assert out["W_c"].tobytes() == params["W_c"].tobytes()
        assert np.any(params["W_i"])

    def test_idempotent(self):
        params = init_params(LSTM, 3, 2, seed=1)
        once = clone_with_zeroed_input_weights(LSTM, params)
        assert once.equal(clone_with_zeroed_input_weights(LSTM, once))

    def test_wrong_config(self):
        cfg = variant_config("LSTM_1")
        with pytest.raises(ContractViolation):
            clone_with_zeroed_input_weights(cfg, init_params(cfg, 2, 2))


def test_parameters_scalar_assignment_broadcasts():
    params = Parameters({"b": np.zeros(3)})
    params["b"] = 2.0
    np.testing.assert_array_equal(params["b"], [2.0, 2.0, 2.0])
