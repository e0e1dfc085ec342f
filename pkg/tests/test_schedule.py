import json

import pytest

from infodrop.schedule import (
    EXPERIMENT_TABLE,
    ExperimentConfig,
    SchedulePlan,
    aid_active,
    build_schedule,
    experiment,
)

# The canonical step-decay tables, hard-coded rather than derived.
S1_TABLE = {"total": 210, "lr": ((0, 1e-3), (170, 1e-4), (200, 1e-5))}
S2_TABLE = {"total": 420, "lr": ((0, 1e-3), (380, 1e-4), (410, 1e-5))}


class TestBuildSchedule:
    def test_s1_boundaries(self):
        plan = build_schedule("S1", "off")
        assert plan.total_epochs == 210
        assert plan.lr_at(0) == 1e-3
        assert plan.lr_at(169) == 1e-3
        assert plan.lr_at(170) == 1e-4
        assert plan.lr_at(199) == 1e-4
        assert plan.lr_at(200) == 1e-5
        assert plan.lr_at(209) == 1e-5

    def test_s2_boundaries(self):
        plan = build_schedule("S2", "on")
        assert plan.total_epochs == 420
        assert plan.lr_at(0) == 1e-3
        assert plan.lr_at(379) == 1e-3
        assert plan.lr_at(380) == 1e-4
        assert plan.lr_at(400) == 1e-4
        assert plan.lr_at(410) == 1e-5

    def test_s2_is_s1_with_shifted_boundaries(self):
        s2 = build_schedule("S2", "off")
        assert s2.lr_segments == S2_TABLE["lr"]
        assert s2.total_epochs == S2_TABLE["total"]

    def test_s3_repeats_s1_profile(self):
        s1 = build_schedule("S1", "off")
        s3 = build_schedule("S3", "off_on")
        assert s3.total_epochs == 420
        for epoch in range(420):
            assert s3.lr_at(epoch) == s1.lr_at(epoch % 210)

    def test_s3_aid_switches_at_210(self):
        s3 = build_schedule("S3", "off_on")
        assert not s3.aid_at(0)
        assert not s3.aid_at(209)
        assert s3.aid_at(210)
        assert s3.aid_at(419)

    def test_s3_rejects_other_modes(self):
        with pytest.raises(ValueError):
            build_schedule("S3", "on")

    def test_s1_rejects_off_on(self):
        with pytest.raises(ValueError):
            build_schedule("S1", "off_on")

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            build_schedule("S9", "off")

    @pytest.mark.parametrize("name,table", [("S1", S1_TABLE), ("S2", S2_TABLE)])
    def test_piecewise_constant_sweep(self, name, table):
        plan = build_schedule(name, "off")
        boundaries = dict(table["lr"])
        current = None
        for epoch in range(plan.total_epochs):
            if epoch in boundaries:
                current = boundaries[epoch]
            assert plan.lr_at(epoch) == current


class TestSchedulePlanValidation:
    def test_rejects_unsorted_segments(self):
        with pytest.raises(ValueError):
            SchedulePlan(10, ((0, 1e-3), (5, 1e-4), (5, 1e-5)), ((0, False),))

    def test_rejects_missing_epoch_zero(self):
        with pytest.raises(ValueError):
            SchedulePlan(10, ((1, 1e-3),), ((0, False),))

    def test_rejects_nonpositive_lr(self):
        with pytest.raises(ValueError):
            SchedulePlan(10, ((0, 0.0),), ((0, False),))

    def test_epoch_out_of_range(self):
        plan = build_schedule("S1", "off")
        with pytest.raises(ValueError):
            plan.lr_at(210)
        with pytest.raises(ValueError):
            plan.lr_at(-1)

    def test_json_roundtrip(self):
        plan = build_schedule("S3", "off_on")
        again = SchedulePlan.from_json(plan.to_json())
        assert again == plan
        doc = json.loads(plan.to_json())
        assert doc["total_epochs"] == 420


class TestExperiments:
    def test_table_mapping(self):
        assert EXPERIMENT_TABLE == {
            "E1": ("S1", "off"),
            "E2": ("S1", "on"),
            "E3": ("S2", "off"),
            "E4": ("S2", "on"),
            "E5": ("S3", "off_on"),
        }

    @pytest.mark.parametrize("exp_id,expected", [("E1", False), ("E3", False)])
    def test_always_off(self, exp_id, expected):
        cfg = experiment(exp_id)
        assert all(
            aid_active(cfg, e) == expected for e in range(cfg.plan.total_epochs)
        )

    @pytest.mark.parametrize("exp_id", ["E2", "E4"])
    def test_always_on(self, exp_id):
        cfg = experiment(exp_id)
        assert all(aid_active(cfg, e) for e in range(cfg.plan.total_epochs))

    def test_e5_off_then_on(self):
        cfg = experiment("E5")
        assert not aid_active(cfg, 100)
        assert aid_active(cfg, 300)

    def test_epoch_range_checked(self):
        cfg = experiment("E1")
        with pytest.raises(ValueError):
            aid_active(cfg, 210)

    def test_unknown_experiment(self):
        with pytest.raises(ValueError):
            ExperimentConfig("E9", build_schedule("S1", "off"))
