from dataclasses import replace

import numpy as np
import pytest

from qspec.null_models import AR1, IID, MCConfig
from qspec.simulation import (
    CSV_COLUMNS,
    ExperimentPlan,
    RejectionTable,
    model_pair,
    published_value,
    reproduce_table,
    run_experiment,
    table_plan,
)


def _small(**kw):
    base = dict(a_values=(0.5,), M_values=(6,), T=60, reps=50, bootstrap_reps=100, master_seed=3,
                levels=tuple(np.linspace(0.1, 0.9, 5)))
    base.update(kw)
    return ExperimentPlan(**base)


def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan(reps=49)
    with pytest.raises(ValueError):
        ExperimentPlan(methods=("normal", "exact"))
    with pytest.raises(ValueError):
        ExperimentPlan(null_model=AR1(0, 0.5, 1))


def test_model_pair_roles():
    ar, arch = model_pair("ar1", 0.5)
    assert ar.kind == "ar1" and arch.kind == "squared_arch1"
    arch2, ar2 = model_pair("squared_arch1", 0.5)
    assert (arch2, ar2) == (arch, ar)
    with pytest.raises(ValueError):
        model_pair("garch", 0.5)


def test_published_lookup():
    assert published_value(1, 0.5, 11, "bootstrap", 0.05, "H0") == 0.015
    assert published_value(4, 0.55, 14, "normal", 0.1, "H0") == 0.143
    assert published_value(2, 0.3, 14, "normal", 0.05, "HA") == 1
    assert published_value(1, 0.7, 11, "normal", 0.05, "H0") is None


def test_alpha_zero_gives_zero_rates():
    tab = run_experiment(_small(alphas=(0.0,)))
    assert all(r["rate"] == 0.0 for r in tab.rows)


def test_deterministic_and_job_independent():
    plan = _small(M_values=(4, 6))
    a = run_experiment(plan)
    b = run_experiment(plan)
    c = run_experiment(plan, n_jobs=2)
    assert a.rows == b.rows == c.rows


def test_infeasible_cells_skipped(caplog):
    tab = run_experiment(_small(a_values=(0.5, 0.6), methods=("normal",)))
    assert {r["a"] for r in tab.rows} == {0.5}
    assert "skipping a=0.6" in caplog.text


def test_explicit_models():
    plan = _small(null_model=IID("norm"), alt_model=AR1(0, 0.8, 1), methods=("normal",))
    tab = run_experiment(plan)
    assert tab.rate(0.5, 6, "normal", 0.05, "HA") >= 0.9


def test_csv_columns(tmp_path):
    tab = run_experiment(_small(methods=("normal",)), table_id=1)
    path = tmp_path / "t.csv"
    text = tab.to_csv(path)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert path.read_text() == text
    assert "published" in tab.format()


def test_rejection_table_se():
    t = RejectionTable()
    t.add(0.5, 11, "normal", 0.05, "H0", 0.5, 50)
    assert t.get(0.5, 11, "normal", 0.05, "H0")["se"] == pytest.approx(np.sqrt(0.25 / 50))
    with pytest.raises(KeyError):
        t.get(0.4, 11, "normal", 0.05, "H0")


def test_unknown_table():
    with pytest.raises(ValueError):
        table_plan(5)


@pytest.mark.slow
def test_table1_desk_scale():
    tab = reproduce_table(1, reps_override=50)
    assert len(tab.rows) == 4 * 4 * 2 * 2 * 2
    assert all(0 <= r["rate"] <= 1 and r["se"] <= 0.0711 for r in tab.rows)
    for r in tab.rows:
        if r["hypothesis"] == "H0":
            assert r["rate"] - 3 * r["se"] <= 0.15
    # power is nondecreasing in a (within Monte Carlo error) at fixed M, method, alpha
    for M in (11, 16, 21, 25):
        for method in ("normal", "bootstrap"):
            rates = [tab.get(a, M, method, 0.05, "HA") for a in (0.3, 0.4, 0.5)]
            for lo, hi in zip(rates, rates[1:]):
                assert hi["rate"] >= lo["rate"] - 3 * np.hypot(lo["se"], hi["se"])


def test_table2_power_cell():
    plan = replace(table_plan(2, reps=50), a_values=(0.4,), M_values=(21,), methods=("normal",))
    tab = run_experiment(plan, table_id=2)
    for alpha in (0.1, 0.05):
        assert tab.rate(0.4, 21, "normal", alpha, "HA") == 1.0


def test_table4_level_cell(tmp_path):
    plan = replace(table_plan(4, reps=200), a_values=(0.55,), M_values=(14,), methods=("normal",),
                   mc_config=MCConfig(cache_dir=str(tmp_path)))
    row = run_experiment(plan, table_id=4).get(0.55, 14, "normal", 0.1, "H0")
    assert row["paper_value"] == 0.143
    se = np.sqrt(0.143 * 0.857 / 200)
    assert abs(row["rate"] - 0.143) <= 3 * se
