import hashlib

import numpy as np
import pytest

from hypercf import data
from hypercf.hypergraph import Hypergraph, extract_subhypergraph, remove_incidences
from hypercf.model import (
    ModelParams, TrainConfig, CheckpointError, init_params, build_operator,
    spectral_norm_estimate, forward, forward_logits, predict, train,
    save_checkpoint, load_checkpoint,
)
from helpers import random_hypergraph, random_instance, dense_operator, chain_hypergraph


# ----------------------------------------------------------- the operator

def test_operator_single_pair_edge():
    # one weight-1 edge over two nodes: d = [1, 1], b = [2], S = ones/2
    h = Hypergraph.from_edge_lists(2, [[0, 1]])
    s = build_operator(h)
    assert np.allclose(s, np.full((2, 2), 0.5), atol=1e-15)


def test_operator_hand_star():
    # edges {0,1} and {0,2}: d = [2, 1, 1], b = [2, 2]
    h = Hypergraph.from_edge_lists(3, [[0, 1], [0, 2]])
    s = build_operator(h)
    r2 = 2.0 ** -0.5
    expect = np.array([
        [0.5, 0.25 * r2 * 2, 0.25 * r2 * 2],
        [0.25 * r2 * 2, 0.5, 0.0],
        [0.25 * r2 * 2, 0.0, 0.5],
    ])
    # S_00 = (1/sqrt2)(1/2 + 1/2)(1/sqrt2); S_01 = (1/sqrt2)(1/2)(1)
    expect[0, 1] = expect[1, 0] = r2 * 0.5
    expect[0, 2] = expect[2, 0] = r2 * 0.5
    assert np.allclose(s, expect, atol=1e-14)


@pytest.mark.parametrize("seed", range(20))
def test_operator_matches_loop_oracle(seed):
    h = random_hypergraph(seed, n_max=15, m_max=15)
    assert np.allclose(build_operator(h), dense_operator(h), atol=1e-12)


@pytest.mark.parametrize("seed", range(12))
def test_masked_operator_matches_loop_oracle(seed):
    h = random_hypergraph(seed, n_max=12, m_max=12)
    rng = np.random.default_rng(seed + 500)
    mask = rng.uniform(0.0, 1.0, size=h.nnz)
    assert np.allclose(build_operator(h, soft_mask=mask),
                       dense_operator(h, mask), atol=1e-12)


def test_operator_zero_degree_row_is_zero():
    h = Hypergraph.from_edge_lists(3, [[0, 1]])  # node 2 isolated
    s = build_operator(h)
    assert np.all(s[2] == 0.0) and np.all(s[:, 2] == 0.0)


def test_operator_is_symmetric():
    for seed in range(5):
        h = random_hypergraph(seed, n_max=20, m_max=20)
        s = build_operator(h)
        assert np.allclose(s, s.T, atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_spectral_estimate_close_to_eigh(seed):
    h = random_hypergraph(seed, n_max=25, m_max=25)
    s = build_operator(h)
    true = float(np.max(np.abs(np.linalg.eigvalsh(s))))
    est = spectral_norm_estimate(s)
    assert est <= true + 1e-9
    assert est >= true - 1e-6  # power iteration converges from below


def test_spectral_estimate_exact_on_projector():
    s = np.full((2, 2), 0.5)  # eigenvalues {1, 0}
    assert spectral_norm_estimate(s) == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------------------ forward pass

def test_forward_rows_are_probabilities():
    h, x, params = random_instance(0)
    probs, logits = forward(h, x, params)
    assert probs.shape == (h.num_nodes, params.layer_dims[-1])
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(probs > 0)
    assert np.all(np.isfinite(logits))


@pytest.mark.parametrize("seed", range(10))
def test_identity_mask_is_bit_identical(seed):
    h, x, params = random_instance(seed)
    _, base = forward(h, x, params)
    _, masked = forward(h, x, params, soft_mask=np.ones(h.nnz))
    assert np.array_equal(base, masked)


def test_forward_logits_tape_path_equals_plain(seed=4):
    h, x, params = random_instance(seed)
    _, plain = forward(h, x, params)
    taped = forward_logits(h, x, params)
    assert np.allclose(taped.value, plain, atol=1e-12)


def test_predict_breaks_ties_toward_lowest_class():
    params = init_params(2, 3, seed=0)
    h = Hypergraph.from_edge_lists(2, [[0, 1]])
    x = np.zeros((2, 2))  # zero features force identical (zero) logits
    cls, probs = predict(h, x, params, 0)
    assert cls == 0
    assert np.allclose(probs, 1.0 / 3.0, atol=1e-12)


def test_forward_train_mode_requires_masks():
    h, x, params = random_instance(1)
    with pytest.raises(ValueError):
        forward_logits(h, x, params, mode="train")
    with pytest.raises(ValueError):
        forward_logits(h, x, params, mode="sample")


def test_masked_forward_agrees_with_edited_graph():
    # binarized mask removing one incidence == structural removal
    h, x, params = random_instance(2)
    pair = tuple(int(v) for v in h.incidences[0])
    mask = np.ones(h.nnz)
    mask[0] = 0.0
    _, masked = forward(h, x, params, soft_mask=mask)
    h2 = remove_incidences(h, [pair])
    _, edited = forward(h2, x, params)
    assert np.allclose(masked, edited, atol=1e-12)


# -------------------------------------------------------------- parameters

def test_init_params_shapes_and_determinism():
    p1 = init_params(7, 4, seed=11)
    p2 = init_params(7, 4, seed=11)
    p3 = init_params(7, 4, seed=12)
    assert [w.shape for w in p1.weights] == [(7, 64), (64, 32), (32, 4), (4, 4)]
    assert all(np.array_equal(a, b) for a, b in zip(p1.weights, p2.weights))
    assert any(not np.array_equal(a, b) for a, b in zip(p1.weights, p3.weights))


def test_init_params_glorot_bounds():
    p = init_params(9, 3, seed=0)
    for w, (fin, fout) in zip(p.weights, [(9, 64), (64, 32), (32, 3), (3, 3)]):
        limit = (6.0 / (fin + fout)) ** 0.5
        assert np.abs(w).max() <= limit + 1e-12


def test_model_params_validates_shapes():
    p = init_params(4, 2, seed=0)
    bad = list(p.weights)
    bad[1] = np.zeros((3, 3))
    with pytest.raises(ValueError):
        ModelParams(layer_dims=p.layer_dims, weights=tuple(bad))


def test_model_params_copies_and_freezes():
    p = init_params(4, 2, seed=0)
    w0 = np.array(p.weights[0])
    src = [np.array(w) for w in p.weights]
    q = ModelParams(layer_dims=p.layer_dims, weights=tuple(src))
    src[0][:] = 0.0
    assert np.array_equal(q.weights[0], w0)
    with pytest.raises(ValueError):
        q.weights[0][0, 0] = 1.0


# ---------------------------------------------------------------- training

def test_train_zero_epochs_returns_init():
    h, x, params = random_instance(3)
    labels = np.zeros(h.num_nodes, dtype=np.int64)
    out = train(h, x, labels, np.arange(h.num_nodes),
                TrainConfig(epochs=0, seed=0), params=params)
    assert all(np.array_equal(a, b) for a, b in zip(out.weights, params.weights))


def test_train_is_deterministic():
    bundle = data.synth_planted(seed=3, num_nodes=24)
    h, x, labels, splits = data.to_structures(bundle)
    cfg = TrainConfig(epochs=30, seed=5)
    p1 = train(h, x, labels, splits["train"], cfg)
    p2 = train(h, x, labels, splits["train"], cfg)
    assert all(np.array_equal(a, b) for a, b in zip(p1.weights, p2.weights))


def test_train_loss_decreases_and_logs(planted_case):
    logs = []
    train(planted_case.h, planted_case.x, planted_case.labels,
          planted_case.splits["train"],
          TrainConfig(epochs=40, seed=0),
          val_nodes=planted_case.splits["val"],
          log_cb=lambda epoch, loss, val_acc: logs.append((epoch, loss, val_acc)))
    assert len(logs) == 40
    assert logs[-1][1] < logs[0][1]
    assert all(v is not None for _, _, v in logs)


def test_planted_defaults_reach_high_accuracy(planted_case):
    probs, _ = forward(planted_case.h, planted_case.x, planted_case.params)
    pred = np.argmax(probs, axis=1)
    for part in ("val", "test"):
        idx = planted_case.splits[part]
        assert np.mean(pred[idx] == planted_case.labels[idx]) >= 0.9


def test_weight_decay_shrinks_weights():
    bundle = data.synth_planted(seed=2, num_nodes=24)
    h, x, labels, splits = data.to_structures(bundle)
    base = TrainConfig(epochs=30, seed=0, weight_decay=0.0)
    decayed = TrainConfig(epochs=30, seed=0, weight_decay=0.05)
    p0 = train(h, x, labels, splits["train"], base)
    p1 = train(h, x, labels, splits["train"], decayed)
    n0 = sum(float(np.sum(w * w)) for w in p0.weights)
    n1 = sum(float(np.sum(w * w)) for w in p1.weights)
    assert n1 < n0


# -------------------------------------------------------------- checkpoints

def _sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def test_checkpoint_round_trip_exact(tmp_path):
    p = init_params(5, 3, seed=9)
    path = tmp_path / "m.ckpt"
    save_checkpoint(p, path)
    q = load_checkpoint(path)
    assert q.layer_dims == p.layer_dims
    assert q.dropout_prob == p.dropout_prob
    assert q.negative_slope == p.negative_slope
    assert q.seed == p.seed
    assert all(np.array_equal(a, b) for a, b in zip(p.weights, q.weights))


def test_checkpoint_bytes_deterministic(tmp_path):
    p = init_params(5, 3, seed=9)
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(p, a)
    save_checkpoint(p, b)
    assert _sha(a) == _sha(b)


def test_checkpoint_corruption_detected(tmp_path):
    p = init_params(4, 2, seed=1)
    path = tmp_path / "m.ckpt"
    save_checkpoint(p, path)
    raw = bytearray(open(path, "rb").read())
    raw[:4] = b"XXXX"
    open(tmp_path / "bad_magic.ckpt", "wb").write(bytes(raw))
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "bad_magic.ckpt")
    open(tmp_path / "short.ckpt", "wb").write(open(path, "rb").read()[:40])
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "short.ckpt")


# ----------------------------------------------------------------- locality

def test_target_logits_equal_on_three_hop_view():
    h = chain_hypergraph(0, n=24)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((h.num_nodes, 3))
    params = init_params(3, 2, seed=0)
    node = 12
    view = extract_subhypergraph(h, x, node, 3)
    _, full_logits = forward(h, x, params)
    _, view_logits = forward(view.sub, view.features, params)
    assert np.allclose(view_logits[view.target_local], full_logits[node],
                       atol=1e-12)
