import pytest

from infodrop.config import (
    ConfigError,
    aid_config_to_dict,
    config_to_dict,
    load_config,
    parse_aid_config,
    parse_config,
)
from infodrop.masking import CutoutParams, GridMaskParams


class TestParseConfig:
    def test_defaults_from_empty(self):
        cfg = parse_config({})
        assert cfg.seed == 0
        assert cfg.aid.method == "none"
        assert cfg.schedule == "S1"
        assert cfg.geom.aid_order == "after_geometry"

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config({"sede": 3})

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(ConfigError, match="aid"):
            parse_config({"aid": {"method": "cutout", "holes": 2}})

    def test_bad_schedule_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"schedule": "S7"})

    def test_full_document(self):
        cfg = parse_config(
            {
                "seed": 9,
                "schedule": "S2",
                "aid": {
                    "method": "cutout",
                    "apply_prob": 0.9,
                    "fill": {"mode": "constant", "values": [1, 2, 3]},
                    "cutout": {"num_holes": 2, "hole_w": 10, "hole_h": 12},
                },
                "geom": {"output_size": [128, 96], "aid_order": "before_geometry"},
                "targets": {"stride": 2, "sigma": 1.5},
            }
        )
        assert cfg.seed == 9
        assert isinstance(cfg.aid.params, CutoutParams)
        assert cfg.aid.params.hole_w == 10
        assert cfg.aid.params.fill.values == (1.0, 2.0, 3.0)
        assert cfg.geom.output_size == (128, 96)
        assert cfg.targets.sigma == 1.5

    def test_method_defaults_scale_with_output_size(self):
        cfg = parse_config({"aid": {"method": "gridmask"}, "geom": {"output_size": [64, 64]}})
        assert isinstance(cfg.aid.params, GridMaskParams)
        assert cfg.aid.params.period_range == (8, 16)

    def test_invalid_values_surface_as_config_errors(self):
        with pytest.raises(ConfigError):
            parse_config({"aid": {"method": "cutout", "apply_prob": 1.7}})


class TestRoundTrip:
    def test_dict_roundtrip(self):
        cfg = parse_config(
            {"aid": {"method": "has", "has": {"grid_rows": 3, "grid_cols": 5, "drop_prob": 0.2}}}
        )
        doc = config_to_dict(cfg)
        again = parse_config(doc)
        assert again.aid == cfg.aid
        assert again.geom == cfg.geom

    def test_aid_roundtrip_every_method(self):
        for method in ("cutout", "random-erase", "has", "gridmask", "none"):
            cfg = parse_aid_config({"method": method}, (64, 64))
            again = parse_aid_config(aid_config_to_dict(cfg), (64, 64))
            assert again == cfg


class TestLoadConfig:
    def test_yaml_file(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("seed: 4\naid:\n  method: has\n")
        cfg = load_config(path)
        assert cfg.seed == 4
        assert cfg.aid.method == "has"

    def test_none_path_gives_defaults(self):
        assert load_config(None).seed == 0

    def test_bad_yaml_reports_config_error(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("a: [unclosed")
        with pytest.raises(ConfigError):
            load_config(path)
