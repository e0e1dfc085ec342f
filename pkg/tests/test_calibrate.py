import pytest

from infodrop.bench import generate_dataset
from infodrop.calibrate import (
    CalibrationSettings,
    _ProbeHarness,
    calibrate,
    probe_loss,
)
from infodrop.masking import AidConfig, CutoutParams, FillPolicy, default_aid_config
from infodrop.types import RngState

FAST = CalibrationSettings(warmup_epochs=6, max_iterations=10)


@pytest.fixture(scope="module")
def probe_set():
    return generate_dataset(RngState(100, "probe"), 96)


@pytest.fixture(scope="module")
def harness(probe_set):
    return _ProbeHarness(probe_set, RngState(0, "calib"), FAST)


class TestProbeLoss:
    def test_deterministic(self, probe_set):
        cfg = default_aid_config("has", (48, 48))
        a = probe_loss(cfg, probe_set, RngState(0, "calib"), FAST)
        b = probe_loss(cfg, probe_set, RngState(0, "calib"), FAST)
        assert a == b

    def test_dropping_raises_loss(self, harness):
        base = harness.loss_for(AidConfig("none", None, 0.5))
        strong = harness.loss_for(
            AidConfig("cutout", CutoutParams(1, 40, 40, FillPolicy()), 0.9)
        )
        assert strong > base

    def test_monotone_in_hole_size(self, harness):
        losses = [
            harness.loss_for(
                AidConfig("cutout", CutoutParams(1, side, side, FillPolicy()), 0.9)
            )
            for side in (4, 16, 32, 44)
        ]
        assert all(a <= b for a, b in zip(losses, losses[1:]))


class TestCalibrate:
    def test_reference_returned_unchanged(self, probe_set):
        cfg = default_aid_config("has", (48, 48))
        results = calibrate([cfg], probe_set, RngState(0, "calib"), FAST)
        assert results[0].config == cfg
        assert results[0].reached
        assert results[0].note == "reference"

    def test_self_calibration_unchanged(self, probe_set):
        cfg = default_aid_config("gridmask", (48, 48))
        results = calibrate([cfg, cfg], probe_set, RngState(0, "calib"), FAST)
        assert results[1].config == cfg
        assert results[1].reached
        assert results[1].relative_error == 0.0

    def test_none_against_dropping_is_unreachable(self, probe_set):
        results = calibrate(
            [default_aid_config("cutout", (48, 48)), AidConfig("none", None, 0.5)],
            probe_set,
            RngState(0, "calib"),
            FAST,
        )
        assert not results[1].reached
        assert "knob" in results[1].note

    def test_cutout_vs_has_within_tolerance(self, probe_set):
        configs = [
            default_aid_config("cutout", (48, 48)),
            default_aid_config("has", (48, 48)),
        ]
        results = calibrate(configs, probe_set, RngState(0, "calib"), FAST)
        assert results[1].reached
        assert results[1].relative_error <= FAST.tolerance

    def test_empty_config_list_rejected(self, probe_set):
        with pytest.raises(ValueError):
            calibrate([], probe_set, RngState(0, "calib"), FAST)
