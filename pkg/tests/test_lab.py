import pytest

import weakvalue
from weakvalue.analysis import sweep_postselection, validity_region
from weakvalue.detector import DetectionConfig
from weakvalue.errors import DegenerateRegionError, VanishingPostselectionError
from weakvalue.meter import CouplingConfig, MeterOrder, sequential_meter
from tests import common


async def test_predict(lab, thin, anomalous_states):
    prediction = await lab.predict(common.THETA_I, common.ANOMALOUS_THETA_F, thin)
    assert prediction == sequential_meter(*anomalous_states, thin)
    first = await lab.predict(common.THETA_I, common.ANOMALOUS_THETA_F, thin, MeterOrder.ORDER1)
    assert first.x_centroid == pytest.approx(1.75, abs=1e-12)


async def test_predict_vanishing_postselection(lab, thin):
    with pytest.raises(VanishingPostselectionError):
        await lab.predict(0.0, 1.5707963267948966, thin)


async def test_sweep_keeps_input_order(lab, thick):
    targets = [2.5, -1.5, 0.5, 3.0, -2.0, 1.0]
    rows = await lab.sweep_weak_values(common.THETA_I, targets, thick)
    assert [row.aw_h_true for row in rows] == pytest.approx(targets, abs=1e-9)


async def test_parallel_sweep_matches_serial(lab, thick):
    angles = [common.ANOMALOUS_THETA_F, 0.3, -0.2, 1.1, common.ORTHOGONAL_THETA_F]
    detection = DetectionConfig(shots=100_000, seed=42)
    rows = await lab.sweep(common.THETA_I, angles, thick, detection)
    assert rows == sweep_postselection(common.THETA_I, angles, thick, detection)
    assert rows[-1].divergent


async def test_regions(lab, thick):
    reports = await lab.regions(thick)
    assert set(reports) == {"x", "y"}
    assert reports["y"] == validity_region(1.7, 4.3)
    assert reports["x"].a == 1.9


async def test_regions_skip_unshifted_axis(lab):
    reports = await lab.regions(CouplingConfig(1.7, 0.0, 4.3))
    assert list(reports) == ["x"]


async def test_regions_degenerate(lab, thick):
    with pytest.raises(DegenerateRegionError):
        await lab.regions(thick, epsilon=1e-7)


async def test_bias(lab):
    rows = await lab.bias(0.7, 4.3, [2.5])
    assert rows[0].bias1 == pytest.approx(-0.048406, abs=2e-6)


async def test_simulate(lab, thin):
    detection = DetectionConfig(shots=100_000, seed=3)
    counts = await lab.simulate(common.THETA_I, common.ANOMALOUS_THETA_F, thin, detection)
    assert counts == await lab.simulate(common.THETA_I, common.ANOMALOUS_THETA_F, thin, detection)
    assert counts.metadata["rng"] == "PCG64"
    assert float(counts.metadata["theta_f"]) == common.ANOMALOUS_THETA_F


async def test_calibrate(lab, thick):
    detection = DetectionConfig(shots=1_000_000, seed=21)
    calibration, counts_h, counts_v = await lab.calibrate(thick, detection)
    assert counts_h.detection.seed != counts_v.detection.seed
    assert abs(calibration.a_x - 1.9) < 3 * calibration.stderr_a_x + 0.01
    assert abs(calibration.a_y - 1.7) < 3 * calibration.stderr_a_y + 0.01


async def test_thread_bound():
    async with weakvalue.Lab(threads=2) as lab:
        assert lab.config.max_workers == 2
        await lab.bias(0.7, 4.3, [1.5])
        assert lab.executor.pool is not None
    assert lab.executor.pool is None
    await lab.close()
