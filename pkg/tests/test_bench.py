import csv
import io
import json
import math
import warnings

import numpy as np
import pytest

from rangebound import BoundsVector, assemble, build_bounds, membership_true, outer_box
from rangebound.bench import (
    CSV_COLUMNS,
    TrialConfig,
    gen_scenario,
    mc_volume_ratio,
    run_batch,
    run_trial,
    table_configs,
    to_csv,
    to_sidecar,
    trial_rng,
)


def test_config_validation():
    with pytest.raises(ValueError):
        TrialConfig(error_level=1.5)
    with pytest.raises(ValueError):
        TrialConfig(basis="diagonal")
    assert TrialConfig(outlier_prob=0.1).preprocess is True
    assert TrialConfig().preprocess is False


def test_gen_scenario_ranges_and_truth():
    cfg = TrialConfig(n=3, m=6, error_level=0.1)
    for i in range(30):
        s = gen_scenario(cfg, i)
        assert np.all(np.abs(s.anchors) <= 1000) and np.all(np.abs(s.true_location) <= 100)
        assert membership_true(s.true_location, s, build_bounds(s.batch))


def test_gen_scenario_deterministic():
    cfg = TrialConfig(m=5, seed=3)
    assert gen_scenario(cfg, 7).to_json() == gen_scenario(cfg, 7).to_json()
    assert gen_scenario(cfg, 7).to_json() != gen_scenario(cfg, 8).to_json()
    # streams are independent of each other
    assert trial_rng(cfg, 0, 0).random() != trial_rng(cfg, 0, 1).random()


def test_outliers_exceed_bounds_sometimes():
    cfg = TrialConfig(m=6, outlier_prob=0.5)
    bad = sum(not membership_true(s.true_location, s, build_bounds(s.batch))
              for s in (gen_scenario(cfg, i) for i in range(20)))
    assert bad > 0


def test_mc_ratio_trivial_when_inner_radii_vanish():
    s = gen_scenario(TrialConfig(m=4), 0)
    b0 = build_bounds(s.batch)
    b = BoundsVector(np.zeros(4), b0.hi)
    sys = assemble(s)
    eta = mc_volume_ratio(sys, b, outer_box(sys, b), 4000, np.random.default_rng(0))
    assert eta == pytest.approx(1.0, abs=3 / math.sqrt(4000))


def test_mc_ratio_at_least_one():
    for i in range(5):
        s = gen_scenario(TrialConfig(m=5), i)
        b = build_bounds(s.batch)
        sys = assemble(s)
        eta = mc_volume_ratio(sys, b, outer_box(sys, b), 2000, np.random.default_rng(i))
        assert eta >= 1 - 3 / math.sqrt(2000)


def test_run_trial_metrics():
    rep = run_trial(TrialConfig(m=6, mc_samples=500), 0)
    assert rep.ok and rep.contains_true
    assert rep.e_outer > 0 and rep.t_r > 0
    assert rep.in_true_cb in (0, 1) and rep.in_true_xhat in (0, 1)
    assert rep.eta_vol >= 1 - 3 / math.sqrt(500)


def test_batch_csv_and_sidecar():
    cells = [run_batch(c) for c in table_configs(1, trials=3, m_max=4, mc_samples=200)]
    text = to_csv(cells)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_COLUMNS
    assert [r[0] for r in rows[1:]] == ["3", "4"]
    assert all(len(r) == len(CSV_COLUMNS) for r in rows)
    doc = json.loads(to_sidecar(cells))
    assert doc["schema"] == "rangebound/1"
    assert doc["cells"][0]["counts"]["trials"] == 3
    assert len(doc["cells"][1]["trials"]) == 3


def test_empty_batch():
    cells = [run_batch(c) for c in table_configs(1, trials=0)]
    assert to_csv(cells) == ",".join(CSV_COLUMNS) + "\n"


def test_csv_reproducible_except_runtime():
    def rows():
        cells = [run_batch(c) for c in table_configs(1, trials=4, m_max=4, mc_samples=300)]
        return [r[:9] + r[10:] for r in csv.reader(io.StringIO(to_csv(cells)))]

    assert rows() == rows()


def test_table_presets():
    assert [c.m for c in table_configs(1)] == list(range(3, 11))
    assert [c.m for c in table_configs(2)] == list(range(4, 11))
    t7 = table_configs(7)[0]
    assert t7.outlier_prob == 0.1 and t7.preprocess and t7.error_level == 0.02


def test_preprocessed_outlier_batch_completes():
    cfg = TrialConfig(m=5, outlier_prob=0.1, trials=10, mc_samples=200)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cell = run_batch(cfg)
    assert cell.failures == 0
