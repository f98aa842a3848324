"""Property harness shared by the unit tests and the acceptance suite."""

import numpy as np

from slimrnn.dynamics import (CellState, InitScheme, Parameters, clone_with_zeroed_input_weights,
                              forward_sequence, init_params, param_layout, restrict)
from slimrnn.numerics import inf_norm
from slimrnn.taxonomy import (BIAS_ONLY, DENSE_CELL, CellConfig, constant,
                              variant_config)

CONSTANT_FORGET = ("LSTM_4i", "LSTM_5i", "LSTM_6", "LSTM_C4i", "LSTM_C5i", "LSTM_C6")
CONSTANT_FORGET_B = ("LSTM_4ib", "LSTM_5ib", "LSTM_6b", "LSTM_C4ib", "LSTM_C5ib", "LSTM_C6b")
HALF_GATES = CellConfig(constant(0.5), constant(0.5), constant(0.5), DENSE_CELL, True,
                        name="constant-half")


def _instance(seed):
    gen = np.random.default_rng(seed)
    n, m, T = int(gen.integers(1, 9)), int(gen.integers(1, 6)), int(gen.integers(1, 12))
    return gen, n, m, T, list(gen.uniform(-2, 2, size=(T, m)))


def hs(config, params, inputs, initial=None):
    return np.stack([s.h for s in forward_sequence(config, params, inputs, initial)[0]])


def ordered(config, arrays, n, m):
    return Parameters({name: arrays[name] for name, _ in param_layout(config, n, m)})


def e1(seed):
    """LSTM with zeroed gate input weights vs LSTM_1 on shared weights; bit-identical."""
    _, n, m, _, xs = _instance(seed)
    full = init_params(variant_config("LSTM"), n, m, seed, InitScheme.RANDOM)
    zeroed = clone_with_zeroed_input_weights(variant_config("LSTM"), full)
    slim = restrict(full, variant_config("LSTM_1"))
    a = hs(variant_config("LSTM"), zeroed, xs)
    b = hs(variant_config("LSTM_1"), slim, xs)
    return a.tobytes() == b.tobytes()


def e2(seed):
    """LSTM_3 with zero gate biases vs three Constant(0.5) gates; bit-identical."""
    _, n, m, _, xs = _instance(seed)
    cfg = variant_config("LSTM_3")
    assert all(g == BIAS_ONLY for g in cfg.gates.values())
    params = init_params(cfg, n, m, seed, InitScheme.RANDOM)
    for role in "ifo":
        params[f"b_{role}"] = 0.0
    a = hs(cfg, params, xs)
    b = hs(HALF_GATES, restrict(params, HALF_GATES), xs)
    return a.tobytes() == b.tobytes()


def e3(seed):
    """Largest deviation of pointwise forms from their dense-diagonal embeddings."""
    _, n, m, _, xs = _instance(seed)
    p4 = init_params(variant_config("LSTM_4"), n, m, seed, InitScheme.RANDOM)
    p2 = {k: v.copy() for k, v in p4.items() if not k.startswith("u_")}
    for role in "ifo":
        p2[f"U_{role}"] = np.diag(p4[f"u_{role}"])
    gate_gap = np.max(np.abs(hs(variant_config("LSTM_4"), p4, xs)
                             - hs(variant_config("LSTM_2"), ordered(variant_config("LSTM_2"), p2, n, m), xs)))

    c1 = init_params(variant_config("CELL_1"), n, m, seed + 1, InitScheme.RANDOM)
    dense = {k: v.copy() for k, v in c1.items() if k != "u_c"}
    dense["U_c"] = np.diag(c1["u_c"])
    cell_gap = np.max(np.abs(hs(variant_config("CELL_1"), c1, xs)
                             - hs(variant_config("LSTM"), ordered(variant_config("LSTM"), dense, n, m), xs)))
    return max(float(gate_gap), float(cell_gap))


def bibo_trial(name, seed, batch=10, alpha=0.96, T=500, X=1.0):
    """``batch`` bounded-input trajectories sharing one random parameter draw.

    Returns the worst ratio of ||c_t|| to its bound over every step and row.
    Outer-nonlinearity forms use 1/(1-alpha) + ||c_0||. "b" forms use the
    geometric bound alpha^t ||c_0|| + K (1 - alpha^t) / (1 - alpha) with
    K = ||W_c|| X + ||U_c or u_c|| + ||b_c||, valid because |h| <= 1 under tanh.
    """
    cfg = variant_config(name, alpha)
    gen = np.random.default_rng(seed)
    n, m = int(gen.integers(1, 9)), int(gen.integers(1, 6))
    params = init_params(cfg, n, m, seed, InitScheme.RANDOM)
    for k in params.names:
        params[k] = params[k] * gen.uniform(0.5, 4.0)
    xs = list(gen.uniform(-X, X, size=(T, batch, m)))
    c0 = gen.uniform(-5, 5, size=(batch, n))
    states, _ = forward_sequence(cfg, params, xs, CellState(c0, np.tanh(c0)))
    norms = np.stack([np.max(np.abs(s.c), axis=1) for s in states])   # (T, batch)
    c0_norm = np.max(np.abs(c0), axis=1)
    if cfg.outer_nonlinearity:
        bound = np.broadcast_to(1.0 / (1.0 - alpha) + c0_norm, norms.shape)
    else:
        mix = params["U_c"] if "U_c" in params else params["u_c"]
        K = inf_norm(params["W_c"]) * X + inf_norm(mix) + inf_norm(params["b_c"])
        decay = alpha ** np.arange(1, T + 1)[:, None]
        bound = decay * c0_norm + K * (1 - decay) / (1 - alpha)
    return float(np.max(norms / bound))
