"""CLI tests: plan parsing, validation, presets, cell execution, and the
process-level entry point with its exit codes."""

import numpy as np
import pytest

from gossipsim.cli import (EXIT_CELL_FAILED, EXIT_CONFIG_ERROR, EXIT_OK,
                           PRESETS, PlanError, cell_config, cell_name,
                           execute_plan, main, parse_plan, preset_plan)

EXAMPLE = "n=100 f=30 S=8 topology=erdos_renyi strategy=random churn=1.0 replicates=10"


# -------------------------------------------------------------- parsing

def test_parse_single_cell_plan():
    plan = parse_plan(EXAMPLE)
    assert len(plan) == 1
    assert plan.replicates == 10
    cell = plan.cells[0]
    assert cell["n"] == 100 and cell["f"] == 30 and cell["S"] == 8
    assert cell["topology"] == "erdos_renyi"
    assert cell["strategy"] == "random"
    assert cell["churn"] == 1.0


def test_parse_sweep_cross_product():
    plan = parse_plan("n=100 f=30 S=[1,4,8,16,32] topology=erdos_renyi")
    assert len(plan) == 5
    assert [c["S"] for c in plan.cells] == [1, 4, 8, 16, 32]
    plan = parse_plan("S=[1,4] strategy=[classical,random] n=100 f=30")
    assert len(plan) == 4


def test_parse_rejects_f_exceeding_n():
    with pytest.raises(PlanError, match="f exceeds n"):
        parse_plan("f=200 n=100")


def test_parse_rejects_unknown_key():
    with pytest.raises(PlanError, match="line 2.*unknown key"):
        parse_plan("n=100\nbogus=3")


def test_parse_rejects_bad_syntax_with_line_number():
    with pytest.raises(PlanError, match="line 3"):
        parse_plan("n=100\nf=10\nnonsense")


def test_parse_rejects_bad_number():
    with pytest.raises(PlanError, match="expects a number"):
        parse_plan("n=ten")


def test_parse_rejects_duplicate_key():
    with pytest.raises(PlanError, match="duplicate"):
        parse_plan("n=100 n=150")


def test_parse_rejects_unknown_topology_and_strategy():
    with pytest.raises(PlanError, match="unknown topology"):
        parse_plan("topology=smallworld")
    with pytest.raises(PlanError, match="unknown strategy"):
        parse_plan("strategy=greedy")


def test_parse_comments_and_defaults():
    plan = parse_plan("# a comment\nn=40 f=2  # trailing\n")
    assert len(plan) == 1
    assert plan.cells[0]["topology"] == "erdos_renyi"
    assert plan.replicates == 10


def test_cell_names_injective_over_sweeps():
    plan = parse_plan("S=[1,4,8] strategy=[classical,random] "
                      "topology=[zipf,erdos_renyi] n=100 f=30")
    names = [cell_name(c) for c in plan.cells]
    assert len(set(names)) == len(names) == 12


def test_cell_config_schedules():
    plan = parse_plan("n=40 f=0 churn=1.0")
    cfg = cell_config(plan.cells[0], plan)
    assert (cfg.rounds, cfg.eval_every) == (1500, 25)
    plan = parse_plan("n=40 f=0 churn=0.2")
    cfg = cell_config(plan.cells[0], plan)
    assert (cfg.rounds, cfg.eval_every) == (6000, 100)
    plan = parse_plan("n=40 f=0 churn=0.2 rounds=100 eval_every=10")
    cfg = cell_config(plan.cells[0], plan)
    assert (cfg.rounds, cfg.eval_every) == (100, 10)


# -------------------------------------------------------------- presets

def test_preset_partition_sweep_grid():
    plan = preset_plan("churnfree-random-sweep")
    assert len(plan) == 2 * 4 * 5
    combos = {(c["n"], c["f"]) for c in plan.cells}
    assert combos == {(100, 30), (150, 45)}
    families = {c["topology"] for c in plan.cells}
    assert families == {"erdos_renyi", "fanout", "random_regular",
                        "watts_strogatz"}
    assert {c["S"] for c in plan.cells} == {1, 4, 8, 16, 32}
    assert all(c["churn"] == 1.0 and c["strategy"] == "random"
               for c in plan.cells)


def test_preset_placement_and_churn_grids():
    plan = preset_plan("placement-comparison")
    assert {c["strategy"] for c in plan.cells} == {"classical", "random"}
    assert {c["topology"] for c in plan.cells} == {"watts_strogatz", "zipf"}
    assert all(c["n"] == 150 and c["f"] == 45 for c in plan.cells)

    plan = preset_plan("churn-f-grid")
    assert {c["f"] for c in plan.cells} == {0, 5, 15, 20, 25, 40, 45}
    assert all(c["topology"] == "zipf" and c["churn"] == 0.2
               for c in plan.cells)

    plan = preset_plan("churn-random-sweep")
    assert all(c["churn"] == 0.2 for c in plan.cells)


def test_preset_unknown():
    with pytest.raises(PlanError, match="unknown preset"):
        preset_plan("everything")


def test_preset_names_injective():
    for name in PRESETS:
        plan = preset_plan(name)
        names = [cell_name(c) for c in plan.cells]
        assert len(set(names)) == len(names)


# ------------------------------------------------------------ execution

@pytest.fixture(scope="module")
def small_training(training):
    return training.subset(np.arange(6000), "training")


def test_execute_single_cell(tmp_path, small_training, test_set):
    plan = parse_plan("n=20 f=3 S=2 topology=erdos_renyi strategy=random "
                      "churn=1.0 replicates=2 rounds=10 eval_every=5")
    rc = execute_plan(plan, small_training, test_set, tmp_path)
    assert rc == EXIT_OK
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == ["erdos_renyi_n20_f3_S2_random_1.0.csv",
                     "erdos_renyi_n20_f3_S2_random_1.0.manifest",
                     "summary.csv"]
    # summary's final metrics equal the last CSV row
    csv_last = (tmp_path / files[0]).read_text().splitlines()[-1]
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0].startswith("cell,round,")
    assert summary[1] == f"erdos_renyi_n20_f3_S2_random_1.0,{csv_last}"


def test_execute_rerun_byte_identical(tmp_path, small_training, test_set):
    plan = parse_plan("n=20 f=3 S=2 replicates=2 rounds=10 eval_every=5")
    for d in ("one", "two"):
        (tmp_path / d).mkdir()
        execute_plan(plan, small_training, test_set, tmp_path / d)
    name = "erdos_renyi_n20_f3_S2_random_1.0.csv"
    assert ((tmp_path / "one" / name).read_bytes()
            == (tmp_path / "two" / name).read_bytes())


def test_execute_fail_soft(tmp_path, small_training, test_set):
    # second cell needs more samples than the training set provides
    plan = parse_plan("n=[20,200] f=0 S=1 replicates=1 rounds=4 "
                      "eval_every=2 topology=erdos_renyi")
    rc = execute_plan(plan, small_training, test_set, tmp_path)
    assert rc == EXIT_CELL_FAILED
    summary = (tmp_path / "summary.csv").read_text()
    assert "FAILED" in summary
    assert (tmp_path / "erdos_renyi_n20_f0_S1_random_1.0.csv").exists()
    assert not (tmp_path / "erdos_renyi_n200_f0_S1_random_1.0.csv").exists()


# ------------------------------------------------------------ entrypoint

def test_main_runs_plan_file(tmp_path, corpus_dir):
    plan_file = tmp_path / "plan.txt"
    plan_file.write_text("n=20 f=2 S=2 replicates=1 rounds=6 eval_every=3\n")
    rc = main(["--plan", str(plan_file), "--data-dir", str(corpus_dir),
               "--out", str(tmp_path / "results")])
    assert rc == EXIT_OK
    assert (tmp_path / "results" / "summary.csv").exists()


def test_main_config_errors(tmp_path, corpus_dir):
    plan_file = tmp_path / "plan.txt"
    plan_file.write_text("f=200 n=100\n")
    rc = main(["--plan", str(plan_file), "--data-dir", str(corpus_dir)])
    assert rc == EXIT_CONFIG_ERROR

    plan_file.write_text("n=20 f=2\n")
    rc = main(["--plan", str(plan_file), "--data-dir",
               str(tmp_path / "nowhere")])
    assert rc == EXIT_CONFIG_ERROR

    rc = main(["--plan", str(plan_file), "--preset", "churn-f-grid",
               "--data-dir", str(corpus_dir)])
    assert rc == EXIT_CONFIG_ERROR


def test_main_env_var_data_dir(tmp_path, corpus_dir, monkeypatch):
    monkeypatch.setenv("GOSSIPSIM_DATA_DIR", str(corpus_dir))
    plan_file = tmp_path / "plan.txt"
    plan_file.write_text("n=20 f=2 S=2 replicates=1 rounds=4 eval_every=2\n")
    rc = main(["--plan", str(plan_file), "--out", str(tmp_path / "r")])
    assert rc == EXIT_OK


def test_main_seed_override(tmp_path, corpus_dir):
    plan_file = tmp_path / "plan.txt"
    plan_file.write_text("n=20 f=2 S=2 replicates=1 rounds=4 eval_every=2\n")
    for seed, out in ((1, "r1"), (2, "r2"), (1, "r3")):
        rc = main(["--plan", str(plan_file), "--data-dir", str(corpus_dir),
                   "--out", str(tmp_path / out), "--seed", str(seed)])
        assert rc == EXIT_OK
    name = "erdos_renyi_n20_f2_S2_random_1.0.csv"
    a = (tmp_path / "r1" / name).read_bytes()
    b = (tmp_path / "r2" / name).read_bytes()
    c = (tmp_path / "r3" / name).read_bytes()
    assert a == c
    assert a != b
