"""Reasoning head: scoring, cross-entropy, analytic gradient, optimizer."""

import numpy as np
import pytest

from bdc_adapter.errors import ShapeError
from bdc_adapter.head import (
    AdamW,
    LinearHead,
    ce_grad,
    ce_loss,
    forward,
    get_lr_cosine_schedule,
    init_from_text,
    init_random,
    make_batch,
)


def _unit_rows(rng, n, d):
    f = rng.standard_normal((n, d))
    return f / np.linalg.norm(f, axis=1, keepdims=True)


def test_forward_is_raw_logits():
    head = LinearHead(weights=np.array([[1.0, 0.0], [0.0, 2.0]]))
    np.testing.assert_allclose(forward(head, [0.6, 0.8]), [0.6, 1.6])
    with pytest.raises(ShapeError):
        forward(head, [1.0, 0.0, 0.0])


def test_init_from_text_normalizes_rows():
    head = init_from_text([[3.0, 4.0], [0.0, 5.0]])
    np.testing.assert_allclose(head.weights, [[0.6, 0.8], [0.0, 1.0]])


def test_init_random_bounds_and_seed():
    head = init_random(3, 16, seed=0)
    assert np.all(np.abs(head.weights) <= 0.25)
    assert head.weights.tobytes() == init_random(3, 16, seed=0).weights.tobytes()


def test_make_batch_validation():
    with pytest.raises(ShapeError):
        make_batch([[1.0, 1.0]], [0], num_classes=2)
    with pytest.raises(ShapeError):
        make_batch([[1.0, 0.0]], [2], num_classes=2)
    with pytest.raises(ShapeError):
        make_batch([[1.0, 0.0]], [0, 1], num_classes=2)


def test_ce_loss_is_summed():
    head = LinearHead(weights=np.zeros((4, 2)))
    batch = make_batch([[1.0, 0.0], [0.0, 1.0]], [0, 3], num_classes=4)
    assert ce_loss(head, batch) == pytest.approx(2.0 * np.log(4.0))


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(3)
    h = 1e-5
    for _ in range(20):
        n_cls = int(rng.integers(2, 6))
        d = int(rng.integers(1, 9))
        size = int(rng.integers(1, 7))
        weights = rng.standard_normal((n_cls, d))
        batch = make_batch(_unit_rows(rng, size, d), rng.integers(0, n_cls, size), n_cls)
        analytic = ce_grad(LinearHead(weights=weights), batch)
        numeric = np.zeros_like(weights)
        for idx in np.ndindex(weights.shape):
            plus = weights.copy()
            minus = weights.copy()
            plus[idx] += h
            minus[idx] -= h
            numeric[idx] = (
                ce_loss(LinearHead(weights=plus), batch) - ce_loss(LinearHead(weights=minus), batch)
            ) / (2 * h)
        denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
        assert np.linalg.norm(analytic - numeric) / denom < 1e-4


def test_cosine_schedule_endpoints():
    assert get_lr_cosine_schedule(0, 1e-3, 100) == pytest.approx(1e-3)
    assert get_lr_cosine_schedule(50, 1e-3, 100) == pytest.approx(5e-4)
    assert get_lr_cosine_schedule(100, 1e-3, 100) == pytest.approx(0.0, abs=1e-18)


def test_adamw_first_step():
    param = np.array([1.0, -2.0])
    grad = np.array([0.5, -0.25])
    opt = AdamW(weight_decay=0.1)
    out = opt.step(param, grad, lr=0.01)
    expected = param * (1 - 0.01 * 0.1) - 0.01 * grad / (np.abs(grad) + 1e-8)
    np.testing.assert_allclose(out, expected)
    np.testing.assert_allclose(param, [1.0, -2.0])


def test_adamw_zero_lr_leaves_param():
    param = np.array([0.3, 0.4])
    out = AdamW().step(param, np.array([1.0, 1.0]), lr=0.0)
    assert out.tobytes() == param.tobytes()


def test_ce_loss_uniform_and_saturated():
    uniform = LinearHead(weights=np.zeros((2, 2)))
    assert ce_loss(uniform, make_batch([[0.6, 0.8]], [1], 2)) == pytest.approx(np.log(2.0))
    margin = LinearHead(weights=np.array([[20.0, 0.0], [0.0, 0.0]]))
    assert ce_loss(margin, make_batch([[1.0, 0.0]], [0], 2)) < 1e-8


def test_ce_loss_matches_unshifted_softmax():
    rng = np.random.default_rng(11)
    weights = 3.0 * rng.standard_normal((4, 5))
    feats = _unit_rows(rng, 6, 5)
    labels = rng.integers(0, 4, 6)
    logits = feats @ weights.T
    direct = -np.sum(np.log(np.exp(logits[np.arange(6), labels]) / np.exp(logits).sum(axis=1)))
    got = ce_loss(LinearHead(weights=weights), make_batch(feats, labels, 4))
    assert got == pytest.approx(direct, abs=1e-10)


def test_ce_grad_uniform_two_class_rows():
    f = np.array([0.6, 0.8])
    grad = ce_grad(LinearHead(weights=np.zeros((2, 2))), make_batch([f], [0], 2))
    np.testing.assert_allclose(grad, [-0.5 * f, 0.5 * f], atol=1e-15)


def test_ce_grad_vanishes_when_confidently_correct():
    head = LinearHead(weights=np.array([[40.0, 0.0], [0.0, 40.0]]))
    batch = make_batch([[1.0, 0.0], [0.0, 1.0]], [0, 1], 2)
    assert np.linalg.norm(ce_grad(head, batch)) < 1e-8


def test_text_initialized_head_ranks_each_prompt_first():
    rng = np.random.default_rng(5)
    for _ in range(10):
        n_cls = int(rng.integers(2, 7))
        text = 2.0 * rng.standard_normal((n_cls, 8))
        head = init_from_text(text)
        for n in range(n_cls):
            assert int(np.argmax(forward(head, text[n]))) == n


def test_make_batch_bounds_text_rows():
    batch = make_batch([[1.0, 0.0], [0.0, 1.0]], [0, 1], 2, text_rows=1)
    assert batch.text_rows == 1
    with pytest.raises(ShapeError):
        make_batch([[1.0, 0.0]], [0], 2, text_rows=2)
