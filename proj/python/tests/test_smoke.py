import json
import math

import pytest

import elc

TINY = {
    "seed": 5,
    "stage1": {"restarts": 4, "max_iterations": 150, "delta_bound": 0.9, "t_max": 20000},
    "stage2": {"colors": ["blue"], "heights": [1], "budget": 120, "max_survivors": 1},
    "thresholds": {"max_error": 0.2, "max_time_ms": 4000},
    "trace_steps": 400,
}


def test_physics_helpers():
    J, U = elc.bare_couplings(20.0)
    assert J == pytest.approx(2.784900073e-3, rel=1e-8)
    assert U == pytest.approx(0.447878352, rel=1e-8)
    assert elc.time_unit(18.0) * 1e3 == pytest.approx(0.195879378, rel=1e-7)
    assert elc.effective_coupling(0.5) == pytest.approx(2e-4 / 0.75)
    assert elc.double_well_gap_ratio(0.01, 1.0, 0.5) == pytest.approx(1.3326830234, rel=1e-9)


def test_two_site_transfer_and_sensitivity():
    t = math.pi / (2 * elc.effective_coupling(0.3))
    assert elc.fidelity_error([0.3], t) < 1e-14
    trace = elc.fidelity_trace([0.3], 1.5 * t, 300)
    assert trace["t_min"] == pytest.approx(t, rel=1e-8)
    assert len(trace["times"]) == 301
    xi = elc.bias_sensitivities([0.3, 0.6, 0.6, 0.3], 2500.0)
    h = 1e-6
    fd = (elc.fidelity_error([0.3 + h, 0.6, 0.6, 0.3], 2500.0) - elc.fidelity_error([0.3 - h, 0.6, 0.6, 0.3], 2500.0)) / (2 * h)
    assert xi[0] == pytest.approx(fd, rel=1e-5)


def test_errors_map_to_python_exceptions():
    with pytest.raises(elc.SingularityError):
        elc.fidelity_error([1.0, 0.0], 10.0)
    with pytest.raises(ValueError):
        elc.load_config({"stage2": {"budgett": 3}})
    with pytest.raises(ValueError):
        elc.correlations([1.0, 2.0], [1.0, 2.0])


def test_config_defaults_and_hash():
    cfg = elc.load_config({})
    assert cfg["problem"] == {"chain_length": 5, "initial_site": 1, "target_site": 5}
    assert cfg["thresholds"] == {"max_error": 0.01, "max_time_ms": 130.0}
    assert elc.config_hash({}) == elc.config_hash(cfg)
    assert elc.config_hash({"seed": 2}) != elc.config_hash({})


def test_tiny_pipeline_and_report(tmp_path):
    messages = []
    db = elc.run_pipeline(TINY, progress=messages.append)
    again = elc.run_pipeline(TINY, threads=2)
    for d in (db, again):
        d["provenance"].pop("started_utc")
        d["provenance"].pop("finished_utc")
    assert db == again
    assert messages and messages[0].startswith("stage 1")
    good = elc.accepted(db)
    assert good
    assert all(r["solution"]["e_min"] < 0.2 for r in good)
    files, warnings = elc.emit_report(db, tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["accepted"]["total"] == len(good)
    assert (tmp_path / "table1.csv").exists()
    assert any(f.endswith(".svg") for f in files)
