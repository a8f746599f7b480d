import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loadsig import synthhome
from loadsig.synthhome import ScenarioError


def _scenario(**overrides):
    d = synthhome.default_scenario_dict()
    d.update(overrides)
    return synthhome.parse_scenario(d)


def test_default_has_eight_appliances():
    names = [a.name for a in synthhome.default_scenario().appliances]
    assert names == ["Fridge", "Furnace", "Microwave", "Kettle", "Stove (big element)", "Oven",
                     "Clothe dryer", "Washer (Top-load)"]


def test_on_counts_match_draws(house_week):
    _, truth = house_week
    for name, per_day in truth.draws.items():
        first = {}
        for e in sorted(truth.for_appliance(name), key=lambda e: e.t):
            first.setdefault(e.cycle, e)
        assert len(first) == sum(per_day), name
        days = Counter(e.t // synthhome.DAY_S for e in first.values())
        assert [days.get(d, 0) for d in range(7)] == list(per_day), name


def test_truth_csv_round_trip(tmp_path, house_week):
    _, truth = house_week
    p = tmp_path / "truth.csv"
    synthhome.save_truth_csv(truth, p)
    back = synthhome.load_truth_csv(p)
    key = lambda e: (e.t, e.appliance, e.state)
    a, b = sorted(truth.events, key=key), sorted(back.events, key=key)
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert (x.t, x.appliance, x.direction, x.dP, x.dQ, x.state) == (y.t, y.appliance, y.direction,
                                                                         y.dP, y.dQ, y.state)


def test_always_off_appliance():
    d = synthhome.default_scenario_dict()
    d["appliances"] = [dict(d["appliances"][3], schedule={"mode": "daily", "cycles_per_day": 0})]
    rec, truth = synthhome.generate(synthhome.parse_scenario(d), 0, 2)
    assert truth.events == []
    assert truth.draws["Kettle"] == [0, 0]


@pytest.mark.parametrize("mutate, where", [
    (lambda d: d["appliances"][0].update(phase="C"), "appliances[0].phase"),
    (lambda d: d["appliances"][0]["program"][0].update(on=["nope"]), "appliances[0].program[0]"),
    (lambda d: d["appliances"][0]["program"][1].update(delay_s=0), "appliances[0].program[1].delay_s"),
    (lambda d: d["appliances"][1].update(name="Fridge"), "appliances[1].name"),
    (lambda d: d.update(noise_sigma=-1), "noise_sigma"),
    (lambda d: d["appliances"][0].update(components={}), "appliances[0].components"),
    (lambda d: d["appliances"][0]["schedule"].update(mode="weekly"), "appliances[0].schedule.mode"),
])
def test_config_errors_name_the_field(mutate, where):
    d = synthhome.default_scenario_dict()
    mutate(d)
    with pytest.raises(ScenarioError) as info:
        synthhome.parse_scenario(d)
    assert info.value.path.startswith(where)


def test_load_scenario_sources(tmp_path):
    assert synthhome.load_scenario("builtin:default").name == synthhome.default_scenario().name
    with pytest.raises(ScenarioError):
        synthhome.load_scenario("builtin:castle")
    p = tmp_path / "s.json"
    p.write_text("{not json", encoding="utf-8")
    with pytest.raises(ScenarioError, match="invalid JSON"):
        synthhome.load_scenario(str(p))
    p.write_text(json.dumps(synthhome.default_scenario_dict()), encoding="utf-8")
    assert len(synthhome.load_scenario(str(p)).appliances) == 8


def test_days_must_be_positive():
    with pytest.raises(ScenarioError):
        synthhome.generate(synthhome.default_scenario(), 0, 0)


def test_heater_lab_counts():
    _, truth = synthhome.heater_lab_scenarios(0)
    heater = Counter(e.state for e in truth.events if e.appliance == "Heater")
    runs = {e.cycle for e in truth.events}
    assert len(runs) == 12
    assert heater["1"] == 12
    assert heater["2"] == heater["3"] == 21
    per_run = Counter(e.cycle for e in truth.events if e.state == "2")
    assert max(per_run.values()) >= 2
    assert heater["6"] == heater["7"] == 4


def test_four_group_replica_composition():
    events, labels = synthhome.four_group_replica(0)
    assert Counter(labels) == {"fridge": 75, "fan": 10, "motor": 2, "corrupted": 1}
    assert len({e.t for e in events}) == 88


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_determinism(seed):
    s = synthhome.default_scenario()
    r1, t1 = synthhome.generate(s, seed, 1)
    r2, t2 = synthhome.generate(s, seed, 1)
    for ph in r1.phases:
        np.testing.assert_array_equal(r1.phases[ph].P, r2.phases[ph].P)
        np.testing.assert_array_equal(r1.phases[ph].THD, r2.phases[ph].THD)
    assert t1.events == t2.events


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_superposition_exact(seed):
    s = synthhome.default_scenario()
    rec, truth = synthhome.generate(s, seed, 2, keep_per_appliance=True)
    for ph in ("A", "B"):
        total = np.full(rec.n, s.baseload[ph].P)
        q = np.full(rec.n, s.baseload[ph].Q)
        for name, arrs in truth.per_appliance.items():
            total = total + arrs[ph][0]
            q = q + arrs[ph][1]
        np.testing.assert_allclose(total, truth.aggregate[ph][0], rtol=0, atol=1e-9)
        np.testing.assert_allclose(q, truth.aggregate[ph][1], rtol=0, atol=1e-9)


def test_noise_free_steps_equal_log():
    s = _scenario(noise_sigma=0.0)
    rec, truth = synthhome.generate(s, 4, 1, keep_per_appliance=True)
    fridge = truth.per_appliance["Fridge"]["A"][0]
    for e in truth.for_appliance("Fridge"):
        # one second before vs settled level three seconds after
        assert fridge[e.t + 3] - fridge[e.t - 1] == pytest.approx(e.dP)
