"""RBF kernel, SMO solver, KKT audit, and model persistence tests."""

import numpy as np
import pytest

from thyrotex.svm import SmoSvc, kkt_report, load_model, rbf_kernel, save_model


def make_blobs(rng, n_per_class=30, sep=6.0, std=1.0):
    a = rng.normal(0.0, std, size=(n_per_class, 2))
    b = rng.normal(0.0, std, size=(n_per_class, 2)) + sep
    X = np.vstack([a, b])
    y = np.array([0] * n_per_class + [1] * n_per_class)
    perm = rng.permutation(len(y))
    return X[perm], y[perm]


def test_rbf_kernel_scalar_values():
    assert rbf_kernel([0.0], [0.0], gamma=1.0) == pytest.approx(1.0)
    assert rbf_kernel([0.0], [1.0], gamma=1.0) == pytest.approx(np.exp(-1.0))
    assert rbf_kernel([0.0, 0.0], [1.0, 1.0], gamma=0.5) == pytest.approx(np.exp(-1.0))


def test_rbf_kernel_matrix_properties():
    rng = np.random.default_rng(163)
    X = rng.normal(size=(12, 4))
    K = rbf_kernel(X, X, gamma=0.3)
    assert K.shape == (12, 12)
    np.testing.assert_allclose(K, K.T, atol=1e-15)
    np.testing.assert_allclose(np.diag(K), 1.0, atol=1e-12)
    assert np.linalg.eigvalsh(K).min() > -1e-10
    with pytest.raises(ValueError, match="gamma"):
        rbf_kernel(X, X, gamma=0.0)
    with pytest.raises(ValueError, match="mismatch"):
        rbf_kernel(X, rng.normal(size=(3, 5)), gamma=1.0)


def test_xor_is_learned():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    clf = SmoSvc(C=10.0, gamma=1.0).fit(X, y)
    np.testing.assert_array_equal(clf.predict(X), y)
    assert clf.converged_


def test_blobs_generalize():
    rng = np.random.default_rng(167)
    X, y = make_blobs(rng)
    clf = SmoSvc(C=1.0, gamma="auto").fit(X, y)
    np.testing.assert_array_equal(clf.predict(X), y)
    X_new, y_new = make_blobs(np.random.default_rng(173))
    assert (clf.predict(X_new) == y_new).mean() == 1.0


def test_dual_solution_constraints():
    rng = np.random.default_rng(179)
    X, y = make_blobs(rng, sep=3.0)
    clf = SmoSvc(C=2.0).fit(X, y)
    assert (clf.alphas_ >= 0.0).all()
    assert (clf.alphas_ <= 2.0 + 1e-12).all()
    y_pm = np.where(y == clf.classes_[1], 1.0, -1.0)
    assert abs(np.dot(clf.alphas_, y_pm)) <= 1e-8
    assert len(clf.support_) == len(clf.dual_coef_) == len(clf.support_vectors_)


def test_kkt_report_clean_fit():
    rng = np.random.default_rng(181)
    X, y = make_blobs(rng, sep=4.0)
    clf = SmoSvc(C=1.0, gamma="auto", tol=1e-3).fit(X, y)
    report = kkt_report(clf, X, y, tol=1e-3)
    assert report["ok"], report
    assert report["dual_balance"] <= 1e-8


def test_kkt_report_noisy_data():
    # Overlapping classes force bound support vectors; the audit must still
    # hold at the training tolerance.
    rng = np.random.default_rng(191)
    X, y = make_blobs(rng, sep=1.0, std=1.0)
    clf = SmoSvc(C=5.0, gamma=0.5, tol=1e-3).fit(X, y)
    assert clf.converged_
    assert kkt_report(clf, X, y)["ok"]


def test_duplicate_points_converge():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0], [0.0, 0.1], [1.0, 0.9]])
    y = np.array([0, 1, 1, 0, 0, 1])
    clf = SmoSvc(C=1.0, gamma=1.0).fit(X, y)
    assert clf.converged_
    assert kkt_report(clf, X, y)["ok"]


def test_label_values_survive():
    rng = np.random.default_rng(193)
    X, y01 = make_blobs(rng)
    y = np.where(y01 == 1, 7, 3)
    clf = SmoSvc().fit(X, y)
    np.testing.assert_array_equal(clf.classes_, [3, 7])
    preds = clf.predict(X)
    assert set(np.unique(preds)) <= {3, 7}
    np.testing.assert_array_equal(preds, y)
    scores = clf.decision_function(X)
    np.testing.assert_array_equal(preds, np.where(scores >= 0, 7, 3))


def test_gamma_auto_resolution():
    X = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]])
    y = np.array([0, 0, 1, 1])
    clf = SmoSvc(gamma="auto").fit(X, y)
    # Per-feature variance is 1.0, so gamma = 1 / (2 * 1).
    assert clf.gamma_ == pytest.approx(0.5)


def test_objective_tracking_monotone():
    rng = np.random.default_rng(197)
    X, y = make_blobs(rng, sep=2.0)
    clf = SmoSvc(C=3.0, track_objective=True).fit(X, y)
    assert clf.objective_deltas_
    assert min(clf.objective_deltas_) >= -1e-9
    assert clf.n_iter_ == len(clf.objective_deltas_)


def test_iteration_cap_warns():
    rng = np.random.default_rng(199)
    X, y = make_blobs(rng, sep=1.5)
    with pytest.warns(UserWarning, match="iteration cap"):
        clf = SmoSvc(max_iter=2).fit(X, y)
    assert not clf.converged_
    assert clf.n_iter_ == 2


def test_decision_function_validation():
    rng = np.random.default_rng(211)
    X, y = make_blobs(rng)
    clf = SmoSvc().fit(X, y)
    with pytest.raises(ValueError, match="model expects 2, input has 3"):
        clf.decision_function(np.zeros((1, 3)))
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        SmoSvc().predict(X)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(223)
    X, y = make_blobs(rng, sep=3.0)
    clf = SmoSvc(C=1.5, gamma=0.2).fit(X, y)
    path = tmp_path / "model.txt"
    save_model(clf, path)
    loaded = load_model(path)
    assert loaded.gamma_ == clf.gamma_
    assert loaded.intercept_ == clf.intercept_
    np.testing.assert_array_equal(loaded.classes_, clf.classes_)
    np.testing.assert_array_equal(loaded.decision_function(X), clf.decision_function(X))
    np.testing.assert_array_equal(loaded.predict(X), clf.predict(X))
    # Saving the loaded model reproduces the file byte for byte.
    path2 = tmp_path / "model2.txt"
    save_model(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_load_model_validation(tmp_path):
    path = tmp_path / "model.txt"
    path.write_text("schema_version=1\ngamma=0.5\n", encoding="utf-8")
    with pytest.raises(ValueError, match="missing fields"):
        load_model(path)
    path.write_text(
        "schema_version=9\ngamma=1\nC=1\nbias=0\nn_features=2\nclasses=0 1\nn_support=0\n",
        encoding="utf-8",
    )
    with pytest.raises(ValueError, match="schema version"):
        load_model(path)
    path.write_text(
        "schema_version=1\ngamma=1\nC=1\nbias=0\nn_features=2\nclasses=0 1\nn_support=2\n"
        "0.5 0 0\n",
        encoding="utf-8",
    )
    with pytest.raises(ValueError, match="support vector lines"):
        load_model(path)
