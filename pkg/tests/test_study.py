import math
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helmlab import study
from helmlab.study import ConvergenceRecord, StudyConfig


def _rec(p, level, h, l2, en, k=4.0, example="disk_robin"):
    return ConvergenceRecord(example, p, level, h, 100 * (level + 1), k,
                             study.compute_n_lambda(100 * (level + 1), k), l2, en, 1.0)


# --- N_lambda ---------------------------------------------------------------

def test_n_lambda_examples():
    assert study.compute_n_lambda(400, 10, math.pi, 2) == pytest.approx(2 * math.pi * 20 / (10 * math.sqrt(math.pi)))
    assert study.compute_n_lambda(400, 10, math.pi, 2) == pytest.approx(7.0898, abs=1e-4)
    assert study.compute_n_lambda(1, 2 * math.pi, 1, 2) == pytest.approx(1.0)
    assert study.compute_n_lambda(10000, 2 * math.pi, area=1.0) == pytest.approx(100.0)
    assert study.compute_n_lambda(1000, 2 * math.pi, area=1.0, d=3) == pytest.approx(10.0)
    with pytest.raises(ValueError):
        study.compute_n_lambda(10, 1.0, d=4)


@given(st.integers(1, 10 ** 7), st.floats(0.1, 100.0))
def test_n_lambda_scaling(dof, k):
    assert study.compute_n_lambda(4 * dof, k) == pytest.approx(2 * study.compute_n_lambda(dof, k))
    assert study.compute_n_lambda(dof, 2 * k) == pytest.approx(study.compute_n_lambda(dof, k) / 2)


def test_dof_closed_form_matches_space():
    for level in range(3):
        for p in (1, 2, 3):
            assert study._dof_count(level, p) == study._space(level, p).n_dof


# --- rate estimation --------------------------------------------------------

@pytest.mark.parametrize("rate", [1.0, 2.0, 3.5])
def test_rate_of_synthetic_power_law(rate):
    hs = [0.5 / 2 ** i for i in range(5)]
    pairs = [(h, 3.0 * h ** rate) for h in hs]
    assert study.estimate_rate(pairs) == pytest.approx(rate, abs=1e-12)
    assert study.estimate_rate(pairs, expected=rate) == pytest.approx(rate, abs=1e-12)


def test_rate_skips_roundoff_and_preasymptotic():
    hs = [0.5 / 2 ** i for i in range(6)]
    errs = [0.9, 0.8, 0.05, 0.05 / 4, 0.05 / 16, 1e-14]
    assert study.estimate_rate(list(zip(hs, errs)), expected=2) == pytest.approx(2.0, abs=1e-12)
    # stagnation at the fine end: the window search falls back to the coarse levels
    errs = [0.05, 0.05 / 4, 0.05 / 16, 0.0029, 0.0028]
    assert study.estimate_rate(list(zip(hs, errs)), expected=2) == pytest.approx(2.0, abs=1e-12)


def test_rate_errors():
    with pytest.raises(study.InsufficientData):
        study.estimate_rate([(0.5, 1e-2), (0.25, 1e-3)])
    with pytest.raises(study.RoundoffFloor):
        study.estimate_rate([(0.5, 1e-2), (0.25, 1e-13), (0.125, 1e-14)])


def test_rate_from_records_and_nan():
    recs = [_rec(1, i, 0.5 / 2 ** i, 0.1 / 4 ** i, 0.1 / 2 ** i) for i in range(4)]
    recs.append(_rec(1, 4, 0.5 / 16, float("nan"), float("nan")))
    assert study.estimate_rate(recs, "err_l2_rel") == pytest.approx(2.0)
    assert study.estimate_rate(recs, "err_energy_rel") == pytest.approx(1.0)


# --- convergence ------------------------------------------------------------

@pytest.fixture(scope="module")
def robin_p2():
    return study.run_convergence(StudyConfig(p=(2,), levels=(1, 2, 3, 4)))


def test_convergence_monotone(robin_p2):
    l2 = [r.err_l2_rel for r in robin_p2]
    assert all(a > b for a, b in zip(l2, l2[1:]))
    assert [r.level for r in robin_p2] == [1, 2, 3, 4]
    assert robin_p2[1].err_l2_rel < 5e-2
    assert all(not r.error for r in robin_p2)


def test_convergence_rates_p2(robin_p2):
    assert abs(study.estimate_rate(robin_p2, "err_l2_rel", 3) - 3) <= 0.25
    assert abs(study.estimate_rate(robin_p2, "err_energy_rel", 2) - 2) <= 0.25


def test_abc2_energy_rate():
    recs = study.run_convergence(StudyConfig(example="disk_abc2", p=(2,), levels=(1, 2, 3, 4)))
    assert abs(study.estimate_rate(recs, "err_energy_rel", 2) - 2) <= 0.25


def test_dtn_example_converges():
    recs = study.run_convergence(StudyConfig(example="disk_dtn", p=(2,), levels=(1, 2, 3, 4)))
    assert abs(study.estimate_rate(recs, "err_l2_rel", 3) - 3) <= 0.25


def test_high_degree_finite():
    rec = study.solve_case("disk_robin", 4, 4, 4.0, StudyConfig())
    assert np.isfinite(rec.err_l2_rel) and rec.err_l2_rel < 1e-6


def test_geometry_degree_cap():
    assert [study.geometry_degree(p) for p in (1, 3, 4, 6, 8)] == [1, 3, 4, 4, 4]


# --- pollution --------------------------------------------------------------

def test_pollution_level_reaches_target():
    for p in (1, 2, 4):
        for k in (4.0, 8.0):
            lv = study.pollution_level(p, k, 12)
            assert study.compute_n_lambda(study._dof_count(lv, p), k) >= 12
            if lv > 0:
                assert study.compute_n_lambda(study._dof_count(lv - 1, p), k) < 12
    with pytest.raises(study.TargetUnreachable):
        study.pollution_level(1, 1000.0, 12)


def test_pollution_growth_p1():
    res = study.run_pollution(StudyConfig(p=(1,), k=(4.0, 8.0, 16.0)))
    assert res.growth[1] > 1.5
    assert all(11.9 <= r.n_lambda <= 13.5 for r in res.records)


def test_pollution_single_k_growth_one():
    res = study.run_pollution(StudyConfig(p=(1,), k=(4.0,)))
    assert res.growth[1] == 1.0


def test_pollution_span_required():
    with pytest.raises(ValueError):
        study.run_pollution(StudyConfig(p=(1,), k=(4.0, 8.0)))


# --- hp study ---------------------------------------------------------------

def test_hp_degree_and_level():
    assert study.hp_degree(4.0, 1.0) == 3
    assert study.hp_degree(32.0, 1.0) == 5
    assert study.hp_degree(1.0, 1.0) == 1
    lv = study.hp_level(16.0, 4, 1.5)
    assert lv is not None
    assert study.hp_level(1e6, 1, 1.5) is None


def test_hp_ratios_at_least_one():
    rows = study.run_hp_study(StudyConfig(k=(4.0, 8.0)))
    for r in rows:
        assert r.ratio >= 1 - 1e-8
        assert r.record.k * r.record.h_max / r.record.p <= 1.5


def test_hp_config_validation():
    with pytest.raises(ValueError):
        study.run_hp_study(StudyConfig(hp=study.HpConfig(c1=5.0)))


def test_hp_growth_requires_two_rows():
    with pytest.raises(study.InsufficientData):
        study.hp_growth([])


# --- output -----------------------------------------------------------------

def test_csv_roundtrip(tmp_path, robin_p2):
    path = tmp_path / "r.csv"
    study.emit_csv(robin_p2, path)
    head = path.read_text().splitlines()[0]
    assert head == "example,p,level,h_max,n_dof,k,n_lambda,err_l2_rel,err_energy_rel,wall_time_ms"
    back = study.read_csv(path)
    assert study.csv_digest_rows(back) == study.csv_digest_rows(robin_p2)


def test_csv_deterministic(tmp_path):
    cfg = StudyConfig(p=(1, 2), levels=(1, 2))
    a = study.csv_digest_rows(study.run_convergence(cfg))
    study._space.cache_clear()
    study._mesh.cache_clear()
    b = study.csv_digest_rows(study.run_convergence(cfg))
    assert a == b


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        study.read_csv(path)
    with pytest.raises(ValueError):
        study.emit_csv([], tmp_path / "empty.csv")


def test_svg_structure(tmp_path):
    recs = [_rec(p, i, 0.5 / 2 ** i, 0.1 / 2 ** ((p + 1) * i), 1.0) for p in (1, 2, 3) for i in range(4)]
    path = tmp_path / "c.svg"
    study.emit_svg(recs, path, -2.0)
    text = path.read_text()
    root = ET.fromstring(text)
    assert root.tag.endswith("svg")
    paths = [e for e in root.iter() if e.tag.endswith("path")]
    assert sorted(e.get("data-p") for e in paths) == ["1", "2", "3"]
    line = re.search(r'<line class="reference"[^>]*>', text).group(0)
    assert "stroke-dasharray" in line
    vals = {k: float(v) for k, v in re.findall(r'data-log-(x0|y0|x1|y1)="([^"]+)"', line)}
    slope = (vals["y1"] - vals["y0"]) / (vals["x1"] - vals["x0"])
    assert slope == pytest.approx(-2.0)


def test_svg_needs_data(tmp_path):
    with pytest.raises(ValueError):
        study.emit_svg([_rec(1, 0, 0.5, float("nan"), 1.0)], tmp_path / "x.svg", -1.0)


# --- config -----------------------------------------------------------------

def test_config_from_dict_roundtrip():
    cfg = StudyConfig.from_dict({"example": "disk_abc2", "p": [1, 3], "k": [4, 8],
                                 "hp": {"c1": 2.0}, "pollution": {"n_lambda_target": 10}})
    assert cfg.p == (1, 3) and cfg.k == (4.0, 8.0) and cfg.hp.c1 == 2.0
    assert StudyConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("bad", [{"nope": 1}, {"hp": {"c3": 1}}, {"example": "square"},
                                 {"levels": [7]}, {"p": [0]}, {"k": [-1.0]}, {"p": []}])
def test_config_rejects(bad):
    with pytest.raises(ValueError):
        StudyConfig.from_dict(bad)


def test_config_toml(tmp_path):
    from helmlab.cli import load_config
    path = tmp_path / "c.toml"
    path.write_text('example = "disk_dtn"\np = [2]\nlevels = [1, 2]\ndtn_cutoff = 12\n'
                    '[output]\nout_dir = "res"\n')
    cfg = load_config(path)
    assert cfg.example == "disk_dtn" and cfg.dtn_cutoff == 12 and cfg.output.out_dir == "res"
