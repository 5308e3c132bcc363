import json
import math

import numpy as np
import pytest

from bsphases.errors import ConfigError, ConvergenceError, DomainError, NumericalError
from bsphases.harness import (
    ExperimentConfig,
    config_from_mapping,
    fit_convergence,
    load_config,
    run_validation,
    sweep_csv,
)

SMALL = dict(family="linear_lz", h_values=[0.04, 0.02, 0.01], mu_values=[0.0, 0.1, 0.2, 0.3], interval=[-4, 4])


def test_config_errors():
    with pytest.raises(ConfigError):
        ExperimentConfig("paper_example", [], [0.1])
    with pytest.raises(ConfigError):
        ExperimentConfig("paper_example", [0.1], [])
    with pytest.raises(ConfigError):
        ExperimentConfig("paper_example", [2.0], [0.1])
    with pytest.raises(ConfigError):
        config_from_mapping({"family": "paper_example", "h_values": [0.1]})
    with pytest.raises(ConfigError):
        config_from_mapping({**SMALL, "colour": "red"})
    with pytest.raises(ConfigError):
        ExperimentConfig("paper_example", [0.1], [[0.1, 0.2]]).build_family()
    with pytest.raises(ConfigError):
        ExperimentConfig("no_such_family", [0.1], [0.1]).build_family()


def test_load_yaml_and_json(tmp_path):
    y = tmp_path / "a.yaml"
    y.write_text("family: linear_lz\nh_values: [0.05]\nmu_values: [0.1, 0.2]\n")
    cfg = load_config(y)
    assert cfg.h_values == [0.05] and cfg.mu_values == [(0.1,), (0.2,)]
    j = tmp_path / "a.json"
    j.write_text(json.dumps(SMALL))
    assert load_config(j).interval == (-4.0, 4.0)
    bad = tmp_path / "b.yaml"
    bad.write_text("family: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_inline_family_config():
    fam = {
        "n": 2, "d": 1, "domain": [-4, 4],
        "entries": [
            {"i": 0, "j": 0, "monomials": [{"powers": [1, 0], "coeff_re": 1.0}]},
            {"i": 1, "j": 1, "monomials": [{"powers": [1, 0], "coeff_re": -1.0}]},
            {"i": 0, "j": 1, "monomials": [{"powers": [0, 1], "coeff_re": 1.0}]},
        ],
    }
    rep = run_validation(ExperimentConfig(fam, [0.05], [0.2]))
    assert rep.records[0].sup_err < 1e-4


@pytest.fixture(scope="module")
def small_report():
    return run_validation(ExperimentConfig(**SMALL))


def test_record_order_and_contents(small_report):
    recs = small_report.records
    assert len(recs) == 12
    assert [r.h for r in recs] == [h for h in SMALL["h_values"] for _ in SMALL["mu_values"]]
    assert [r.mu[0] for r in recs[:4]] == SMALL["mu_values"]
    for r in recs:
        assert r.sup_err >= 0 and not r.flagged
        assert r.defect_pred <= 1e-10
        assert np.allclose(r.p_oracle.sum(axis=0), 1, atol=1e-9)
        assert r.sup_err < 1e-3


def test_adiabatic_record():
    h = 0.005
    mu = math.sqrt(2 * 20 * h)
    r = run_validation(ExperimentConfig("linear_lz", [h], [mu], oracle_tol=1e-10)).records[0]
    assert np.allclose(r.p_pred, np.eye(2), atol=1e-12)
    assert r.sup_err < 1e-8


def test_paper_example_record():
    r = run_validation(ExperimentConfig("paper_example", [0.01], [0.1])).records[0]
    assert r.sup_err <= 0.12 * math.sqrt(0.01)
    assert len(r.gamma0) == 2


def test_sweep_csv_deterministic(tmp_path, small_report):
    cfg = ExperimentConfig(**SMALL)
    p1 = sweep_csv(cfg, tmp_path / "a.csv", report=small_report)
    p2 = sweep_csv(cfg, tmp_path / "b.csv")
    lines = p1.read_text().splitlines()
    assert len(lines) == 13
    assert lines[0] == (
        "h,mu,gamma0_1,p_pred_11,p_pred_12,p_pred_21,p_pred_22,"
        "p_oracle_11,p_oracle_12,p_oracle_21,p_oracle_22,sup_err,defect_pred,defect_oracle"
    )
    assert p1.read_bytes() == p2.read_bytes()
    mirror = json.loads(p1.with_suffix(".json").read_text())
    assert mirror["header"] == lines[0].split(",")
    row = [float(x) for x in lines[5].split(",")]
    assert row == mirror["rows"][4]


def test_sweep_unwritable(tmp_path, small_report):
    with pytest.raises(ConfigError):
        sweep_csv(ExperimentConfig(**SMALL), tmp_path / "nope" / "x.csv", report=small_report)
    with pytest.raises(ConfigError):
        sweep_csv(ExperimentConfig(**SMALL), None, report=small_report)


def test_stueckelberg_oscillation():
    mus = np.linspace(0.0, 0.3, 31)
    rep = run_validation(ExperimentConfig("paper_example", [0.01], list(mus)))
    p = np.array([r.p_pred[0, 0] for r in rep.records])
    turns = np.sum(np.diff(np.sign(np.diff(p))) != 0)
    assert turns >= 3


def test_fit_convergence_synthetic():
    h = np.logspace(-3, -1, 6)
    assert abs(fit_convergence(list(zip(h, h))) - 1.0) < 1e-6
    assert abs(fit_convergence(list(zip(h, np.sqrt(h)))) - 0.5) < 1e-6
    with pytest.raises(DomainError):
        fit_convergence(list(zip(h[:3], h[:3])))
    with pytest.raises(DomainError):
        fit_convergence(list(zip(np.linspace(0.01, 0.02, 5), np.ones(5))))
    with pytest.raises(NumericalError):
        fit_convergence(list(zip(h, np.zeros(6))))


def test_workers_same_result():
    cfg = dict(family="linear_lz", h_values=[0.04], mu_values=[0.1, 0.2], interval=[-4, 4])
    a = run_validation(ExperimentConfig(**cfg))
    b = run_validation(ExperimentConfig(**cfg, workers=2))
    assert [r.to_json() for r in a.records] == [r.to_json() for r in b.records]


def test_error_context(monkeypatch):
    import bsphases.harness as hm

    def boom(*a, **k):
        raise ConvergenceError("budget exhausted", 1.0)

    monkeypatch.setattr(hm, "oracle_channel", boom)
    with pytest.raises(ConvergenceError) as info:
        run_validation(ExperimentConfig("linear_lz", [0.05], [0.1]))
    assert "[h=0.05, mu=[0.1]]" in str(info.value)
    assert info.value.residual == 1.0
