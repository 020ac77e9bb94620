import csv
import math

import pytest

import vodsim


def small_config(**extra):
    keys = dict(box_count=40, content_count=10, storage_per_box=3, repetitions=2, horizon=3)
    keys.update(extra)
    return vodsim.Config(**keys)


def test_formulas():
    assert vodsim.optimal_loss(2.0) == pytest.approx(0.5)
    assert vodsim.optimal_loss(0.5) == 0.0
    assert vodsim.erlang_b(2.0, 2) == pytest.approx(0.4)
    pop = vodsim.zipf_popularity(500, 0.8)
    assert math.fsum(pop) == pytest.approx(1.0, abs=1e-12)
    assert pop == sorted(pop, reverse=True)


def test_water_filling_worked_example():
    wf = vodsim.water_filling([0.4, 0.3, 0.2, 0.1], 10.0, 2)
    assert wf["absorbed_load"] == pytest.approx(7.75)
    assert wf["threshold"] == 2
    assert wf["m"] == pytest.approx([1.0, 0.75, 0.25, 0.0])


def test_config_from_keywords():
    cfg = small_config(load=1.5, t_r_max="unlimited")
    assert cfg.box_count == 40
    assert cfg.content_count == 10
    assert cfg.load == 1.5
    again = vodsim.Config.from_text(cfg.to_text())
    assert again.to_text() == cfg.to_text()
    with pytest.raises(ValueError):
        vodsim.Config(box_count=0)
    with pytest.raises(ValueError):
        vodsim.Config(not_a_key=1)


def test_placement_shapes():
    cfg = small_config()
    caches = vodsim.placement(cfg, "SAMP", 7)
    assert len(caches) == 40
    assert all(len(c) == 3 and len(set(c)) == 3 for c in caches)
    assert caches == vodsim.placement(cfg, "SAMP", 7)
    with pytest.raises(ValueError):
        vodsim.placement(cfg, "NOPE", 1)


def test_feasibility_agrees_with_hall():
    caches = [[0, 1], [1, 2]]
    assert vodsim.is_feasible([1, 1, 1], caches, 2)
    assert not vodsim.is_feasible([3, 0, 0], caches, 2)
    feasible, witness = vodsim.hall_check([3, 0, 0], caches, 2)
    assert not feasible
    assert witness == [0]


def test_simulation_conserves_requests():
    cfg = small_config(load=1.2)
    caches = vodsim.placement(cfg, "SAMP", 3)
    m = vodsim.simulate(cfg, caches, 11)
    for a, acc, rej, loc in zip(m["arrivals"], m["acceptances"], m["rejections"],
                                m["local_services"]):
        assert a == acc + rej + loc
    assert 0.0 <= m["system_loss"] <= 1.0
    assert m == vodsim.simulate(cfg, caches, 11)


def test_experiment_statistics():
    r = vodsim.run_experiment(small_config(load=0.5), "UNIF", repetitions=3, seed=5)
    mean, sd = r["system_loss"]
    assert 0.0 <= mean <= 1.0 and sd >= 0.0
    assert len(r["content_loss"]) == 10
    assert len(r["seeds"]) == 3


def test_exact_ctmc_single_content():
    cfg = vodsim.Config(box_count=2, storage_per_box=1, uplink_slots=2, load=0.75,
                        popularity=[1.0])
    assert vodsim.exact_ctmc_loss(cfg, [[0], [0]]) == pytest.approx([vodsim.erlang_b(3.0, 4)])


def test_validation_lp_suite():
    results = vodsim.validate("lp")
    assert results and all(passed for _, passed, _ in results)
    with pytest.raises(ValueError):
        vodsim.validate("nope")


def test_run_plan_writes_csv(tmp_path):
    plan = "\n".join([
        "name = py",
        "box_count = 40",
        "content_count = 10",
        "storage_per_box = 3",
        "repetitions = 2",
        "horizon = 3",
        "sweep.load = 0.5, 2",
        "strategies = SAMP, Optimal",
    ])
    rows = vodsim.run_plan(plan, str(tmp_path))
    with open(tmp_path / "py.csv", newline="") as fh:
        written = list(csv.DictReader(fh))
    assert len(written) == len(rows) == 2 * (5 + 1)
    optimal = [r for r in rows if r["strategy"] == "Optimal"]
    assert [r["mean"] for r in optimal] == pytest.approx([0.0, 0.5])
    assert "fig2" in vodsim.recipe_names()
