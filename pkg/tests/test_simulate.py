"""Ground-truth models, sequence generation, and the recovery harness."""

import numpy as np
import pytest

from smmfit.markov import count_transitions, empirical_transitions
from smmfit.simulate import (
    ExperimentConfig,
    GroundTruthSMM,
    build_setup1,
    build_setup2,
    generate_sequence,
    replicates_csv,
    run_recovery_experiment,
    sample_dirichlet,
    summary_csv,
)
from smmfit.solver import SolverConfig
from smmfit.weights import WeightScheme

UNIFORM = WeightScheme(kind="uniform")


def test_dirichlet_draws_live_on_the_simplex():
    rng = np.random.default_rng(0)
    for _ in range(50):
        draw = sample_dirichlet(np.array([0.5, 1.0, 3.0]), rng)
        assert draw.sum() == pytest.approx(1.0)
        assert np.all(draw > 0)
    with pytest.raises(ValueError):
        sample_dirichlet(np.array([1.0, 0.0]), rng)


def test_dirichlet_concentrates_at_large_parameters():
    rng = np.random.default_rng(1)
    params = np.array([2000.0, 6000.0, 2000.0])
    draws = np.array([sample_dirichlet(params, rng) for _ in range(200)])
    assert np.max(np.abs(draws.mean(axis=0) - [0.2, 0.6, 0.2])) < 0.01


def test_setup1_block_structure():
    rng = np.random.default_rng(2)
    t2 = build_setup1(2, rng, seed=11)
    assert (t2.p, t2.k0, t2.d) == (16, 4, 4)
    assert t2.labels.tolist() == [i // 4 for i in range(16)]
    assert np.allclose(t2.R.sum(axis=1), 1.0)
    assert t2.seed == 11
    t3 = build_setup1(3, rng)
    assert (t3.p, t3.k0) == (64, 8)
    assert t3.labels.tolist() == [i // 8 for i in range(64)]
    with pytest.raises(ValueError):
        build_setup1(1, rng)


def test_setup1_rows_vary_between_draws():
    a = build_setup1(2, np.random.default_rng(3))
    b = build_setup1(2, np.random.default_rng(4))
    assert not np.allclose(a.R, b.R)


def test_setup2_is_fixed():
    t = build_setup2()
    assert (t.m, t.d, t.p, t.k0) == (3, 4, 64, 4)
    assert t.sizes().tolist() == [18, 18, 15, 13]
    assert np.allclose(t.R, np.full((4, 4), 0.1) + 0.6 * np.eye(4))
    assert np.array_equal(build_setup2().R, t.R)


def test_ground_truth_validation():
    with pytest.raises(ValueError):
        GroundTruthSMM(m=1, d=2, labels=np.array([0]), R=np.array([[0.5, 0.5]]))
    with pytest.raises(ValueError):
        GroundTruthSMM(m=1, d=2, labels=np.array([0, 0]), R=np.array([[0.5, 0.5], [0.5, 0.5]]))
    with pytest.raises(ValueError):
        GroundTruthSMM(m=1, d=2, labels=np.array([0, 1]), R=np.array([[0.7, 0.7], [0.5, 0.5]]))


def test_generate_point_mass_is_constant():
    truth = GroundTruthSMM(m=1, d=2, labels=np.array([0, 1]), R=np.eye(2))
    seq = generate_sequence(truth, 50, np.random.default_rng(5), burn_in=10)
    assert seq.n == 50
    assert np.all(seq.codes == seq.codes[0])


def test_generate_deterministic_per_seed():
    truth = build_setup2()
    a = generate_sequence(truth, 500, np.random.default_rng(6))
    b = generate_sequence(truth, 500, np.random.default_rng(6))
    c = generate_sequence(truth, 500, np.random.default_rng(7))
    assert np.array_equal(a.codes, b.codes)
    assert not np.array_equal(a.codes, c.codes)
    with pytest.raises(ValueError):
        generate_sequence(truth, 3, np.random.default_rng(8))


def test_generated_frequencies_match_the_law():
    # two-state chain with P(0->1) = 0.2, P(1->0) = 0.3: stationary mass on
    # state 0 is 0.3 / 0.5
    truth = GroundTruthSMM(
        m=1, d=2, labels=np.array([0, 1]), R=np.array([[0.8, 0.2], [0.3, 0.7]])
    )
    seq = generate_sequence(truth, 200_000, np.random.default_rng(9))
    assert np.mean(seq.codes == 0) == pytest.approx(0.6, abs=0.01)


def test_generated_conditional_rows_match_the_law():
    truth = build_setup2()
    seq = generate_sequence(truth, 100_000, np.random.default_rng(10))
    counts = count_transitions(seq, 3)
    emp = empirical_transitions(counts)
    obs, rows = emp.observed_rows()
    assert obs.size == 64  # every context visited at this length
    expect = truth.R[truth.labels[obs]]
    assert np.max(np.abs(rows - expect)) < 0.05


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(setup="setup3", m=2, n_values=(100,), replicates=1, scheme=UNIFORM)
    with pytest.raises(ValueError):
        ExperimentConfig(setup="custom", m=1, n_values=(100,), replicates=1, scheme=UNIFORM)
    with pytest.raises(ValueError):
        ExperimentConfig(setup="setup1", m=2, n_values=(100,), replicates=0, scheme=UNIFORM)


def two_group_model():
    return GroundTruthSMM(
        m=1,
        d=3,
        labels=np.array([0, 0, 1]),
        R=np.array([[0.45, 0.45, 0.1], [0.1, 0.1, 0.8]]),
    )


def test_recovery_experiment_on_easy_model():
    config = ExperimentConfig(
        setup="custom",
        m=1,
        n_values=(3000,),
        replicates=3,
        scheme=UNIFORM,
        grid_size=25,
        seed=0,
        custom_model=two_group_model(),
    )
    summary = run_recovery_experiment(config)
    row = summary.row_for(3000)
    assert row.replicates == 3
    assert row.mean_ari == pytest.approx(1.0)
    assert row.recovery_rate == pytest.approx(1.0)
    assert all(rec.k_hat == 2 for rec in summary.records)
    assert all(rec.all_observed for rec in summary.records)
    with pytest.raises(KeyError):
        summary.row_for(12345)


def test_experiment_is_reproducible_and_thread_invariant():
    config = ExperimentConfig(
        setup="custom",
        m=1,
        n_values=(400, 800),
        replicates=4,
        scheme=UNIFORM,
        grid_size=12,
        seed=5,
        custom_model=two_group_model(),
    )
    s1 = run_recovery_experiment(config, threads=1)
    s2 = run_recovery_experiment(config, threads=1)
    s3 = run_recovery_experiment(config, threads=3)
    assert replicates_csv(s1) == replicates_csv(s2) == replicates_csv(s3)
    assert summary_csv(s1) == summary_csv(s2) == summary_csv(s3)


def test_csv_layout():
    config = ExperimentConfig(
        setup="custom",
        m=1,
        n_values=(500,),
        replicates=2,
        scheme=UNIFORM,
        grid_size=10,
        seed=1,
        custom_model=two_group_model(),
    )
    summary = run_recovery_experiment(config)
    rep_lines = replicates_csv(summary).splitlines()
    assert rep_lines[0] == (
        "replicate,n,scheme,ri,ari,k_hat,lambda,recovered,all_observed,non_converged"
    )
    assert len(rep_lines) == 3
    first = rep_lines[1].split(",")
    assert first[0] == "0" and first[1] == "500" and first[2] == "uniform"
    assert first[7] in ("0", "1")
    sum_lines = summary_csv(summary).splitlines()
    assert sum_lines[0] == "n,scheme,replicates,mean_ri,se_ri,mean_ari,se_ari,recovery_rate"
    assert len(sum_lines) == 2


def test_summary_standard_errors():
    config = ExperimentConfig(
        setup="custom",
        m=1,
        n_values=(300,),
        replicates=5,
        scheme=UNIFORM,
        grid_size=10,
        seed=2,
        custom_model=two_group_model(),
    )
    summary = run_recovery_experiment(config)
    ari = np.array([rec.ari for rec in summary.records])
    row = summary.row_for(300)
    assert row.mean_ari == pytest.approx(float(ari.mean()))
    assert row.se_ari == pytest.approx(float(np.std(ari, ddof=1) / np.sqrt(5)))


def test_uniform_weights_fail_where_neighbor_weights_recover():
    # same generating process, two weight choices: dense uniform weights
    # scatter the path away from the truth at this length, while kernel kNN
    # weights find it
    knn = WeightScheme(kind="knn_kernel", distance="l2", kernel="gaussian", phi=100.0, k=3)
    common = dict(setup="setup1", m=2, n_values=(10_000,), replicates=3, grid_size=40, seed=0)
    good = run_recovery_experiment(ExperimentConfig(scheme=knn, **common))
    assert good.row_for(10_000).mean_ari >= 0.8

    config = ExperimentConfig(
        setup="setup1",
        m=3,
        n_values=(5_000,),
        replicates=4,
        scheme=UNIFORM,
        grid_size=40,
        seed=0,
    )
    bad = run_recovery_experiment(config)
    row = bad.row_for(5_000)
    assert row.recovery_rate <= 0.25
    assert row.mean_ari < 0.45
