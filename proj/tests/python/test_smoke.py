"""Smoke tests for the python bindings."""

import math

import pytest

import cometflows as cf


def test_version():
    assert cf.__version__


def test_gp_closed_forms():
    assert cf.gp_pdf(0.0, 0.0, 1.0, 0.0) == pytest.approx(1.0)
    assert cf.gp_pdf(1.0, 0.0, 1.0, 1.0) == pytest.approx(0.25)
    assert cf.gp_cdf(1.0, 0.0, 1.0, 1.0) == pytest.approx(0.5)
    assert cf.gp_ppf(0.5, 0.0, 1.0, 1.0) == pytest.approx(1.0)


def test_gp_fit_recovers_exponential():
    # exponential data is the xi = 0 member
    import random

    rng = random.Random(7)
    xs = [-math.log(1.0 - rng.random()) for _ in range(5000)]
    sigma, xi = cf.gp_fit(xs)
    assert abs(xi) < 0.15
    assert abs(sigma - 1.0) < 0.1


def test_synthetic_structure():
    rows = cf.gen_synthetic(2000, seed=11)
    assert len(rows) == 2000
    assert all(len(r) == 8 for r in rows)
    assert all(r[6] == r[7] for r in rows)
    # deterministic per seed
    again = cf.gen_synthetic(2000, seed=11)
    assert rows == again


def test_marginal_round_trip():
    rows = cf.gen_synthetic(4000, seed=3)
    column = [r[0] for r in rows]
    marginal = cf.fit_marginal(column, 0.05, 0.95)
    for x in column[:200]:
        u = marginal.transform(x)
        assert 0.0 < u < 1.0
        assert marginal.inverse(u) == pytest.approx(x, abs=1e-6)
    assert marginal.log_density(0.5) > -1e9


def test_csv_round_trip(tmp_path):
    path = str(tmp_path / "data.csv")
    rows = [[0.1 + 0.2, 1.0 / 3.0], [-1e-12, 42.0]]
    cf.save_csv(path, rows, ["a", "b"])
    back, columns = cf.load_csv(path)
    assert columns == ["a", "b"]
    assert back == rows


def test_fit_log_prob_sample_save_load(tmp_path):
    train = cf.gen_synthetic(1200, seed=21)
    val = cf.gen_synthetic(200, seed=22)

    cfg = cf.TrainConfig()
    cfg.coupling_layers = 4
    cfg.hidden = [16]
    cfg.max_epochs = 2
    cfg.seed = 5

    model, log = cf.fit(train, val, cfg, "comet")
    assert model.dim == 8
    assert model.mode == "comet"
    assert len(log) >= 1
    epoch, train_loss, val_loss, is_best = log[0]
    assert epoch == 1 and math.isfinite(train_loss) and math.isfinite(val_loss)

    lp = model.log_prob(train[0])
    assert math.isfinite(lp)

    samples = model.sample(16, sigma=0.0, seed=9)
    assert len(samples) == 16
    assert samples == model.sample(16, sigma=0.0, seed=9)

    path = str(tmp_path / "model.comet")
    model.save(path)
    back = cf.load_model(path)
    assert back.log_prob(train[0]) == lp
    assert back.mode == "comet"

    test_rows = cf.gen_synthetic(300, seed=23)
    nll = cf.avg_nll(model, test_rows)
    assert math.isfinite(nll)

    report = cf.evaluate(model, test_rows, sample_count=400, seed=17)
    assert math.isfinite(report.average_nll)
    assert len(report.pit_ks) == 8
    assert "avg_nll" in report.to_text()


def test_metrics():
    rows = cf.gen_synthetic(20000, seed=31)
    lam = cf.tail_dep_coeff(rows, 0, 1, 0.99, side="upper")
    assert lam >= 0.5
    ks = cf.ks_uniformity([k / 1000.0 for k in range(1, 1001)])
    assert ks == pytest.approx(1e-3)


def test_errors_surface_as_python_exceptions():
    with pytest.raises(Exception):
        cf.gp_ppf(1.5)  # quantile outside (0,1)
    with pytest.raises(Exception):
        cf.load_model("/nonexistent/model.comet")
