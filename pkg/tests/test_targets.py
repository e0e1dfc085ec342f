import math

import numpy as np
import pytest

from infodrop.targets import (
    HeatmapStack,
    decode_heatmap,
    load_heatmaps,
    render_heatmaps,
    save_heatmaps,
)

from conftest import make_instance


def render_bruteforce(instance, out_size, stride, sigma):
    """Independent loop over every cell, same truncation rule."""
    out_h, out_w = out_size
    k = instance.layout.num_keypoints
    maps = np.zeros((k, out_h, out_w))
    for i, (x, y, v) in enumerate(instance.keypoints):
        if v <= 0:
            continue
        cx, cy = x / stride, y / stride
        for vv in range(out_h):
            for uu in range(out_w):
                d2 = (uu - cx) ** 2 + (vv - cy) ** 2
                if d2 <= (3.0 * sigma) ** 2:
                    maps[i, vv, uu] = math.exp(-d2 / (2.0 * sigma * sigma))
    return maps


class TestRender:
    def test_peak_one_at_cell_center(self):
        inst = make_instance([(16.0, 8.0)], [2])
        stack = render_heatmaps(inst, (16, 24), stride=4.0, sigma=2.0)
        assert stack.maps[0, 2, 4] == 1.0

    def test_value_at_one_sigma(self):
        inst = make_instance([(16.0, 8.0)], [2])
        stack = render_heatmaps(inst, (16, 24), stride=4.0, sigma=2.0)
        # Two cells to the right = one sigma.
        assert stack.maps[0, 2, 6] == pytest.approx(math.exp(-0.5), abs=1e-15)

    def test_unlabeled_map_is_zero(self):
        inst = make_instance([(16.0, 8.0), (20.0, 8.0)], [0, 2], area=64.0)
        stack = render_heatmaps(inst, (16, 24), stride=4.0, sigma=2.0)
        assert not stack.maps[0].any()
        assert stack.maps[1].any()

    def test_matches_bruteforce_sum(self):
        inst = make_instance([(100.3, 120.7)], [2])
        stack = render_heatmaps(inst, (48, 64), stride=4.0, sigma=2.0)
        brute = render_bruteforce(inst, (48, 64), 4.0, 2.0)
        assert abs(stack.maps.sum() - brute.sum()) <= 1e-12
        assert np.abs(stack.maps - brute).max() <= 1e-15

    def test_offgrid_keypoint_renders_tail(self):
        inst = make_instance([(-6.0, 8.0)], [2])
        stack = render_heatmaps(inst, (16, 24), stride=4.0, sigma=2.0)
        brute = render_bruteforce(inst, (16, 24), 4.0, 2.0)
        assert np.abs(stack.maps - brute).max() <= 1e-15
        assert stack.maps[0].any()

    def test_monotone_decay_along_axes(self):
        inst = make_instance([(32.0, 32.0)], [2])
        stack = render_heatmaps(inst, (16, 16), stride=4.0, sigma=1.5)
        row = stack.maps[0, 8, 8:]
        col = stack.maps[0, 8:, 8]
        assert (np.diff(row) <= 1e-15).all()
        assert (np.diff(col) <= 1e-15).all()

    def test_sigma_must_be_positive(self):
        inst = make_instance([(1.0, 1.0)], [2])
        with pytest.raises(ValueError):
            render_heatmaps(inst, (8, 8), stride=4.0, sigma=0.0)


class TestDecode:
    def test_roundtrip_exact_at_cell_center(self):
        inst = make_instance([(16.0, 8.0)], [2])
        stack = render_heatmaps(inst, (16, 24), stride=4.0, sigma=2.0)
        decoded = decode_heatmap(stack)
        assert decoded[0, :2] == pytest.approx([16.0, 8.0])
        assert decoded[0, 2] == 1.0

    def test_tie_break_row_major(self):
        maps = np.zeros((1, 4, 4))
        maps[0, 1, 1] = 1.0
        maps[0, 2, 3] = 1.0
        decoded = decode_heatmap(HeatmapStack(maps, 1.0, 1.0))
        # Lowest row-major index wins; quarter shift pulls toward nothing
        # since neighbors are symmetric zeros.
        assert decoded[0, 0] == 1.0 and decoded[0, 1] == 1.0

    def test_all_zero_map_decodes_to_center(self):
        maps = np.zeros((1, 5, 7))
        decoded = decode_heatmap(HeatmapStack(maps, 2.0, 1.0))
        assert decoded[0].tolist() == [3.0 * 2.0, 2.0 * 2.0, 0.0]

    def test_subcell_offsets_within_half_cell(self):
        stride, sigma = 4.0, 2.0
        for off in np.linspace(0.0, 0.5, 11):
            for oy in (0.0, 0.3):
                x, y = 32.0 + off * stride, 24.0 + oy * stride
                inst = make_instance([(x, y)], [2])
                stack = render_heatmaps(inst, (16, 24), stride, sigma)
                decoded = decode_heatmap(stack)
                err = max(abs(decoded[0, 0] - x), abs(decoded[0, 1] - y))
                assert err <= 0.5 * stride + 1e-12


class TestTensorFile:
    def test_roundtrip(self, tmp_path):
        inst = make_instance([(10.0, 12.0), (30.0, 4.0)], [2, 1])
        stack = render_heatmaps(inst, (12, 16), stride=2.0, sigma=1.5)
        path = tmp_path / "maps.hmt"
        save_heatmaps(stack, path)
        loaded = load_heatmaps(path)
        assert np.array_equal(loaded.maps, stack.maps)
        assert (loaded.stride, loaded.sigma) == (2.0, 1.5)

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b'{"not": "heatmaps"}\n1234')
        with pytest.raises(ValueError):
            load_heatmaps(path)
