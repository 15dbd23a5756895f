import math
import os
from pathlib import Path

import pytest

import bwadapt
from bwadapt import oracle

SOURCE_DIR = Path(os.environ.get("BWADAPT_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def web_call(call_id, kbps):
    call = bwadapt.Call()
    call.id = call_id
    call.class_index = 2
    call.allocation_kbps = kbps
    call.elastic = True
    return call


def test_default_matrix():
    matrix = bwadapt.PolicyMatrix(bwadapt.default_classes())
    assert matrix.num_classes == 4
    assert bwadapt.validate_matrix(matrix) is None
    assert matrix.gamma(3, 2) == pytest.approx(0.63175, rel=1e-12)
    assert matrix.floor(2, 4) == pytest.approx(61.35555, rel=1e-12)


def test_admit_degrades_in_proportion():
    matrix = bwadapt.PolicyMatrix(bwadapt.default_classes())
    cell = bwadapt.CellState(472.0, 4)
    for i in (1, 2, 3):
        cell.add(web_call(i, 120.0))
    video = bwadapt.Call()
    video.id = 4
    video.class_index = 3
    decision = bwadapt.admit(cell, video, bwadapt.RequestPriority.new_call(3), matrix)
    assert decision.admitted
    assert decision.granted_kbps == 256.0
    assert [d.new_kbps for d in decision.degradations] == pytest.approx([72.0] * 3)
    assert cell.allocated == pytest.approx(472.0)
    assert len(cell) == 4


def test_oracles():
    assert oracle.erlang_b(2, 1.0) == pytest.approx(0.2)
    system = oracle.MultirateSystem(4, [oracle.MultirateClass(1, 1.0), oracle.MultirateClass(2, 1.0)])
    kr = oracle.kaufman_roberts(system)
    assert kr == pytest.approx([25 / 137, 53 / 137], rel=1e-12)
    assert oracle.ctmc_blocking(system) == pytest.approx(kr, abs=1e-9)


def test_short_run():
    config = bwadapt.ScenarioConfig()
    config.lambda_ = 0.6
    config.duration_s = 3000.0
    config.warmup_s = 500.0
    config.check_invariants = True
    metrics = bwadapt.run(config)
    assert metrics.invariant_violations == 0
    assert metrics.events_processed > 0
    assert 0.0 < metrics.utilization.value <= 1.0
    assert metrics.classes[0].mean_allocation_kbps.value == pytest.approx(32.0)


def test_sweep_csv():
    spec = bwadapt.SweepSpec()
    spec.base.duration_s = 2000.0
    spec.base.warmup_s = 200.0
    spec.lambda_grid = [0.4]
    spec.schemes = [bwadapt.SchemeKind.NonAdaptiveNonPriority]
    points = bwadapt.run_sweep(spec)
    csv = bwadapt.sweep_csv(points, bwadapt.PolicyMatrix(bwadapt.default_classes()))
    lines = csv.strip().splitlines()
    assert lines[0] == bwadapt.CSV_HEADER
    assert [line.split(",")[2] for line in lines[1:]] == ["voice", "web", "video", "background", "all"]


def test_config_errors():
    config = bwadapt.load_config(str(SOURCE_DIR / "configs" / "default.conf"))
    assert config.lambda_ == 0.6
    with pytest.raises(ValueError, match="gamma"):
        bwadapt.load_config(str(SOURCE_DIR / "tests" / "data" / "gamma_one.conf"))
    bad = bwadapt.ScenarioConfig()
    bad.lambda_ = -1.0
    with pytest.raises(bwadapt.ConfigError):
        bwadapt.validate_config(bad)
    assert math.isinf(bwadapt.parse_config(
        (SOURCE_DIR / "configs" / "default.conf").read_text().replace("dwell_s = 240", "dwell_s = inf")
    ).mean_dwell_s)
