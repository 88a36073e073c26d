import math

import numpy as np
import pytest

from pairlink.errors import ConfigError, NumericError, ShapeError, TrainingError
from pairlink.models import (
    TrainConfig,
    TrainedModel,
    load_model,
    loss_and_gradient,
    predict,
    save_model,
    train,
)
from pairlink.preprocess import FeatureMatrix


def fm(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8)
    cols = tuple(f"c{i}" for i in range(X.shape[1]))
    return FeatureMatrix(ids=np.arange(len(y), dtype=np.uint64), X=X, y=y, columns=cols)


def zero_model(k, loss, l2=0.0):
    return TrainedModel(
        weights=np.zeros(k), bias=0.0, loss=loss,
        threshold=0.5 if loss == "logistic" else 0.0,
        columns=tuple(f"c{i}" for i in range(k)), l2=l2,
    )


def random_instance(rng, loss):
    n = int(rng.integers(5, 40))
    k = int(rng.integers(1, 6))
    X = rng.normal(size=(n, k))
    y = rng.integers(0, 2, size=n)
    w = rng.normal(size=k)
    b = float(rng.normal())
    l2 = float(rng.uniform(0, 0.5))
    model = TrainedModel(
        weights=w, bias=b, loss=loss, threshold=0.0,
        columns=tuple(f"c{i}" for i in range(k)), l2=l2,
    )
    return model, fm(X, y)


def test_config_validation():
    TrainConfig()  # defaults fine
    with pytest.raises(ConfigError):
        TrainConfig(loss="square")
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0)
    with pytest.raises(ConfigError):
        TrainConfig(l2=-0.1)
    with pytest.raises(ConfigError):
        TrainConfig(tolerance=-1e-9)


def test_config_defaults():
    c = TrainConfig()
    assert (c.learning_rate, c.epochs, c.l2, c.tolerance) == (2.0, 2000, 0.001, 1e-6)
    assert c.loss == "logistic"


def test_logistic_zero_model_loss_is_ln2():
    rng = np.random.default_rng(0)
    data = fm(rng.normal(size=(37, 4)), rng.integers(0, 2, size=37))
    loss, _ = loss_and_gradient(zero_model(4, "logistic"), data)
    assert loss == pytest.approx(math.log(2.0), rel=1e-12)


def test_hinge_zero_model_loss_is_one():
    rng = np.random.default_rng(1)
    data = fm(rng.normal(size=(23, 3)), rng.integers(0, 2, size=23))
    loss, _ = loss_and_gradient(zero_model(3, "hinge"), data)
    assert loss == pytest.approx(1.0, rel=1e-12)


def _fd_gradient(model, data, eps=1e-6):
    """Central finite differences over the packed (weights, bias) vector."""
    k = len(model.weights)
    theta = np.append(model.weights, model.bias)
    grad = np.empty(k + 1)
    for i in range(k + 1):
        up, dn = theta.copy(), theta.copy()
        up[i] += eps
        dn[i] -= eps
        m_up = TrainedModel(weights=up[:k], bias=float(up[k]), loss=model.loss,
                            threshold=0.0, columns=model.columns, l2=model.l2)
        m_dn = TrainedModel(weights=dn[:k], bias=float(dn[k]), loss=model.loss,
                            threshold=0.0, columns=model.columns, l2=model.l2)
        grad[i] = (loss_and_gradient(m_up, data)[0] - loss_and_gradient(m_dn, data)[0]) / (2 * eps)
    return grad


def _far_from_kinks(model, data, eps):
    z = data.X @ model.weights + model.bias
    ys = data.y.astype(np.float64) * 2 - 1
    margin = 1 - ys * z
    scale = 1 + np.abs(data.X).sum(axis=1)
    return bool(np.all(np.abs(margin) > 10 * eps * scale))


def test_gradient_matches_finite_differences_50_instances():
    rng = np.random.default_rng(42)
    checked = {"logistic": 0, "hinge": 0}
    while min(checked.values()) < 25:
        loss = "logistic" if checked["logistic"] <= checked["hinge"] else "hinge"
        model, data = random_instance(rng, loss)
        if loss == "hinge" and not _far_from_kinks(model, data, 1e-6):
            continue
        analytic = loss_and_gradient(model, data)[1]
        numeric = _fd_gradient(model, data)
        denom = max(float(np.max(np.abs(numeric))), 1.0)
        rel = float(np.max(np.abs(analytic - numeric))) / denom
        assert rel < 1e-5, (loss, rel)
        checked[loss] += 1


def test_width_mismatch_raises_shape_error():
    data = fm(np.ones((3, 2)), [0, 1, 0])
    with pytest.raises(ShapeError):
        loss_and_gradient(zero_model(3, "logistic"), data)
    with pytest.raises(ShapeError):
        predict(zero_model(3, "hinge"), data)


def test_train_separable_toy_both_losses():
    X = np.array([[0.0], [0.0], [1.0], [1.0]])
    y = np.array([0, 0, 1, 1])
    for loss in ("logistic", "hinge"):
        model = train(fm(X, y), TrainConfig(loss=loss, epochs=200, l2=0.0))
        labels, _ = predict(model, fm(X, y))
        assert labels.tolist() == [0, 0, 1, 1], loss
        assert math.isfinite(model.final_loss)


def test_train_rejects_empty_and_single_class():
    with pytest.raises(TrainingError):
        train(fm(np.empty((0, 2)), []))
    with pytest.raises(TrainingError, match="single class"):
        train(fm(np.ones((4, 1)), [1, 1, 1, 1]))


def test_train_divergence_reports_numeric_error():
    X = np.array([[1e4], [-1e4], [1e4], [-1e4]])
    y = np.array([1, 0, 1, 0])
    with pytest.raises(NumericError, match="learning rate"):
        train(fm(X, y), TrainConfig(loss="hinge", learning_rate=1e12, epochs=60, l2=1e8))


def test_train_is_deterministic_bit_for_bit():
    rng = np.random.default_rng(7)
    data = fm(rng.normal(size=(120, 5)), rng.integers(0, 2, size=120))
    a = train(data, TrainConfig())
    b = train(data, TrainConfig())
    assert a.weights.tobytes() == b.weights.tobytes()
    assert a.bias == b.bias
    assert a.final_loss == b.final_loss
    assert a.epochs_run == b.epochs_run


def test_monotone_loss_with_small_rate():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(80, 3))
    y = (X[:, 0] + 0.5 * rng.normal(size=80) > 0).astype(int)
    data = fm(X, y)
    losses = []
    for epochs in range(1, 12):
        m = train(data, TrainConfig(loss="logistic", learning_rate=0.05, epochs=epochs, tolerance=0.0))
        losses.append(m.final_loss)
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_fixed_point_after_convergence():
    X = np.array([[0.0], [0.2], [0.8], [1.0], [0.1], [0.9]])
    y = np.array([0, 0, 1, 1, 0, 1])
    m1 = train(fm(X, y), TrainConfig(loss="logistic", learning_rate=0.5, epochs=30_000,
                                     l2=0.1, tolerance=1e-6))
    assert m1.converged
    assert m1.epochs_run < 30_000
    # doubling the budget stops at the same gradient-tolerance fixed point
    m2 = train(fm(X, y), TrainConfig(loss="logistic", learning_rate=0.5, epochs=60_000,
                                     l2=0.1, tolerance=1e-6))
    assert m2.weights.tobytes() == m1.weights.tobytes()
    assert m2.bias == m1.bias
    assert m2.epochs_run == m1.epochs_run


def test_logistic_matches_independent_optimizer_on_blobs():
    scipy_optimize = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(12)
    n = 100
    X = np.vstack([rng.normal(-1.0, 1.0, size=(n, 2)), rng.normal(1.0, 1.0, size=(n, 2))])
    y = np.array([0] * n + [1] * n)
    data = fm(X, y)
    l2 = 0.1

    def objective(theta):
        w, b = theta[:2], theta[2]
        z = X @ w + b
        return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))

    ref = scipy_optimize.minimize(objective, np.zeros(3), method="L-BFGS-B",
                                  options={"ftol": 1e-15, "gtol": 1e-12}).x
    ours = train(data, TrainConfig(loss="logistic", learning_rate=1.0, epochs=5000,
                                   l2=l2, tolerance=1e-9))
    packed = np.append(ours.weights, ours.bias)
    assert np.allclose(packed, ref, atol=1e-4)
    # and the induced decision boundaries agree everywhere on the data
    ref_labels = (X @ ref[:2] + ref[2] >= 0).astype(int)
    our_labels, _ = predict(ours, data)
    assert our_labels.tolist() == ref_labels.tolist()


def test_predict_constant_bias_thresholds():
    data = fm(np.random.default_rng(0).normal(size=(10, 2)), [0, 1] * 5)
    up = TrainedModel(weights=np.zeros(2), bias=10.0, loss="logistic",
                      threshold=0.5, columns=("a", "b"))
    down = TrainedModel(weights=np.zeros(2), bias=-10.0, loss="logistic",
                        threshold=0.5, columns=("a", "b"))
    assert predict(up, data)[0].tolist() == [1] * 10
    assert predict(down, data)[0].tolist() == [0] * 10
    scores = predict(up, data)[1]
    assert np.all((scores > 0.99) & (scores <= 1.0))


def test_hinge_scores_are_margins():
    m = TrainedModel(weights=np.array([2.0]), bias=-1.0, loss="hinge",
                     threshold=0.0, columns=("a",))
    data = fm(np.array([[0.0], [0.5], [1.0]]), [0, 0, 1])
    labels, scores = predict(m, data)
    assert scores.tolist() == [-1.0, 0.0, 1.0]
    assert labels.tolist() == [0, 1, 1]  # margin 0 sits on the positive side


def test_model_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    data = fm(rng.normal(size=(60, 3)), rng.integers(0, 2, size=60))
    model = train(data, TrainConfig(loss="hinge", epochs=50))
    path = tmp_path / "model.txt"
    save_model(model, path)
    again = load_model(path)
    assert again.weights.tobytes() == model.weights.tobytes()
    assert again.bias == model.bias
    assert again.loss == model.loss
    assert again.threshold == model.threshold
    assert again.columns == model.columns
    assert again.final_loss == model.final_loss
    assert again.epochs_run == model.epochs_run
    assert again.converged == model.converged
    # identical predictions
    l1, s1 = predict(model, data)
    l2, s2 = predict(again, data)
    assert l1.tolist() == l2.tolist()
    assert s1.tobytes() == s2.tobytes()


def test_load_model_rejects_other_files(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("not a model\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_model(path)


def test_scale_invariance_of_converged_predictions():
    X = np.array([[0.0], [0.1], [0.9], [1.0]])
    y = np.array([0, 0, 1, 1])
    scale = 4.0
    m_base = train(fm(X, y), TrainConfig(loss="logistic", learning_rate=0.8,
                                         epochs=3000, l2=0.0, tolerance=1e-9))
    m_scaled = train(fm(X * scale, y), TrainConfig(loss="logistic",
                                                   learning_rate=0.8 / scale**2,
                                                   epochs=3000, l2=0.0, tolerance=1e-9))
    base_labels, _ = predict(m_base, fm(X, y))
    scaled_labels, _ = predict(m_scaled, fm(X * scale, y))
    assert base_labels.tolist() == scaled_labels.tolist() == [0, 0, 1, 1]
