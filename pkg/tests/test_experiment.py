import numpy as np
import pytest

from pilotfair.dataset import StratumError
from pilotfair.experiment import (ExperimentConfig, TrialError, figure_data_csv, run_experiment,
                                  summary_json, trial_seeds, trials_csv)
from pilotfair.model_select import GridSpec
from pilotfair.synth import CohortSpec, generate
from pilotfair.tree import TreeParams


@pytest.fixture(scope="module")
def default_run():
    data = generate(CohortSpec.sex_confounded(), 7)
    return run_experiment(data, ExperimentConfig(master_seed=7))


def test_summary_shape(default_run):
    records, summary = default_run
    assert len(records) == 30 and summary["n_trials"] == 30
    for c in ("demographic_parity", "equalized_odds"):
        assert summary[c]["t_test"]["df"] == 58
        assert 0 <= summary[c]["t_test"]["p_value"] <= 1
        assert summary[c]["mean_fit_gap"] <= 1e-9
    m = summary["equalized_odds"]["metrics"]
    mean_fnr = (m["false_negative_rate_female"]["before"] + m["false_negative_rate_male"]["before"]) / 2
    assert m["false_negative_rate_mean"]["before"] == pytest.approx(mean_fnr)


def test_metric_means_are_per_trial_averages(default_run):
    records, summary = default_run
    want = np.mean([r.before.demographic_parity_ratio for r in records])
    got = summary["demographic_parity"]["metrics"]["demographic_parity_ratio"]["before"]
    assert got == want


def test_deterministic(default_run):
    _, summary = default_run
    data = generate(CohortSpec.sex_confounded(), 7)
    _, again = run_experiment(data, ExperimentConfig(master_seed=7))
    assert summary_json(summary) == summary_json(again)


def test_trial_seeds_distinct():
    seeds = {s for t in range(30) for s in trial_seeds(0, t)}
    assert len(seeds) == 120
    assert trial_seeds(3, 4) == trial_seeds(3, 4)


def test_uninformative_scores_near_chance():
    cells = {"pilot": {"female": 30, "male": 30}, "non_pilot": {"female": 30, "male": 30}}
    accs = []
    for seed in range(3):
        data = generate(CohortSpec(cell_counts=cells, separation=0.0), seed)
        cfg = ExperimentConfig(n_trials=10, positive_target=60, master_seed=seed,
                               constraint="dp")
        accs.append(run_experiment(data, cfg)[1]["accuracy"]["before"])
    assert abs(np.mean(accs) - 0.5) < 0.08


def test_single_constraint_and_auto_params():
    data = generate(CohortSpec.sex_confounded(), 1)
    grid = GridSpec(max_depth_values=(2, 3), min_samples_leaf_values=(2,),
                    min_samples_split_values=(2,), k=4)
    records, summary = run_experiment(
        data, ExperimentConfig(n_trials=3, constraint="eo", tree_params="auto", grid=grid))
    assert "demographic_parity" not in summary
    assert len({r.tree_params for r in records}) == 1
    assert isinstance(records[0].tree_params, TreeParams)


def test_stage_attribution():
    cells = {"pilot": {"female": 1, "male": 5}, "non_pilot": {"female": 5, "male": 5}}
    data = generate(CohortSpec(cell_counts=cells), 0)
    # the lone female pilot never reaches the test split, so its tpr is undefined
    with pytest.raises(TrialError) as exc:
        run_experiment(data, ExperimentConfig(n_trials=2, positive_target=6))
    assert exc.value.stage == "audit_before" and exc.value.trial == 0
    cells["pilot"]["female"] = 0
    with pytest.raises(TrialError) as exc:
        run_experiment(generate(CohortSpec(cell_counts=cells), 0),
                       ExperimentConfig(n_trials=2, positive_target=5))
    assert exc.value.stage == "split"
    assert isinstance(exc.value.__cause__, StratumError)


def test_csv_exports(default_run):
    records, summary = default_run
    trials = trials_csv(records).splitlines()
    assert trials[0] == "trial,phase,constraint,metric,group,value"
    fig = figure_data_csv(summary).splitlines()
    assert fig[0] == "metric,group,phase,value"
    # 6 charts: two per-group bar pairs and four scalar pairs
    assert len(fig) == 1 + 2 * (2 * 2 + 4)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(n_trials=1)
    with pytest.raises(ValueError):
        ExperimentConfig(constraint="nope")
    assert ExperimentConfig(constraint="dp").constraint == "demographic_parity"
