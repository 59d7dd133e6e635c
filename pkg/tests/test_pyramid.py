import numpy as np
import pytest

from varfast import (
    InvalidTarget,
    KernelChoice,
    PyramidSchedule,
    Rng,
    TokenMap,
    inf_norm_diff,
    kernel_eval,
    pyramid_up,
    up_interpolate,
)
from varfast.pyramid import up_gain
from varfast.verify import verify_upinterp_nonexpansive

from _oracles import catmullrom_weight, up_interpolate_oracle

BS = KernelChoice.CUBIC_BSPLINE
CR = KernelChoice.CATMULL_ROM

# oracle output for [[0,1],[2,3]] resampled to 4x4, frozen
EXPECTED_2X2_TO_4X4 = np.array(
    [
        [0.2109375, 0.45833333333333337, 0.8229166666666666, 1.0703125000000002],
        [0.7057291666666669, 0.9531250000000006, 1.3177083333333335, 1.565104166666667],
        [1.4348958333333333, 1.6822916666666667, 2.046875, 2.294270833333334],
        [1.9296875000000004, 2.1770833333333344, 2.5416666666666674, 2.7890625000000013],
    ]
)


class TestKernelEval:
    def test_bspline_center(self):
        assert kernel_eval(BS, 0.0) == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_bspline_at_one(self):
        assert kernel_eval(BS, 1.0) == pytest.approx(1.0 / 6.0, abs=1e-15)

    def test_zero_outside_support(self):
        for choice in (BS, CR):
            assert kernel_eval(choice, 2.0) == 0.0
            assert kernel_eval(choice, -2.0) == 0.0
            assert kernel_eval(choice, 3.7) == 0.0

    def test_bspline_range(self):
        xs = np.linspace(-2.5, 2.5, 401)
        vals = [kernel_eval(BS, x) for x in xs]
        assert min(vals) >= 0.0
        assert max(vals) <= 1.0

    def test_catmullrom_interpolating(self):
        assert kernel_eval(CR, 0.0) == 1.0
        assert kernel_eval(CR, 1.0) == 0.0
        assert kernel_eval(CR, 1.5) < 0.0  # the negative lobe

    def test_even_symmetry(self):
        for choice in (BS, CR):
            for x in (0.3, 0.9, 1.4, 1.9):
                assert kernel_eval(choice, x) == pytest.approx(kernel_eval(choice, -x), abs=1e-15)

    def test_oracle_agreement_catmullrom(self):
        for x in np.linspace(-2, 2, 41):
            assert kernel_eval(CR, x) == pytest.approx(catmullrom_weight(x), abs=1e-14)


class TestUpInterpolate:
    def test_constant_map_stays_constant(self):
        cm = TokenMap(np.full((3, 2, 4), -2.5))
        for th, tw in ((3, 2), (5, 5), (9, 4)):
            out = up_interpolate(cm, th, tw, BS)
            assert out.shape == (th, tw, 4)
            assert np.allclose(out.data, -2.5, atol=1e-14)

    def test_single_token_broadcast(self):
        src = TokenMap(np.array([[[1.0, -3.0]]]))
        out = up_interpolate(src, 4, 6, BS)
        assert np.allclose(out.data, src.data[0, 0], atol=1e-14)

    def test_matches_frozen_oracle_values(self):
        src = TokenMap(np.array([[0.0, 1.0], [2.0, 3.0]]).reshape(2, 2, 1))
        out = up_interpolate(src, 4, 4, BS)
        assert np.allclose(out.data[:, :, 0], EXPECTED_2X2_TO_4X4, atol=1e-12)

    @pytest.mark.parametrize("choice", [BS, CR])
    def test_matches_live_oracle_on_random_inputs(self, choice):
        rng = Rng(21)
        for trial in range(20):
            sub = rng.split(trial)
            h, w, d = sub.integers(1, 5), sub.integers(1, 5), sub.integers(1, 4)
            th, tw = sub.integers(h, 3 * h + 1), sub.integers(w, 3 * w + 1)
            src = sub.uniform(-2, 2, (h, w, d))
            weight_fn = catmullrom_weight if choice is CR else None
            kwargs = {} if weight_fn is None else {"weight_fn": weight_fn}
            expected = up_interpolate_oracle(src, th, tw, **kwargs)
            got = up_interpolate(TokenMap(src), th, tw, choice)
            assert np.allclose(got.data, expected, atol=1e-12)

    def test_range_preservation_bspline(self):
        rng = Rng(22)
        src = rng.uniform(-5, 5, (3, 3, 2))
        out = up_interpolate(TokenMap(src), 7, 8, BS)
        for c in range(2):
            assert out.data[:, :, c].min() >= src[:, :, c].min() - 1e-12
            assert out.data[:, :, c].max() <= src[:, :, c].max() + 1e-12

    def test_determinism(self):
        src = TokenMap(Rng(23).uniform(-1, 1, (4, 4, 3)))
        a = up_interpolate(src, 9, 9, BS)
        b = up_interpolate(src, 9, 9, BS)
        assert (a.data == b.data).all()

    def test_shrinking_target_rejected(self):
        src = TokenMap(np.zeros((3, 3, 1)))
        with pytest.raises(InvalidTarget):
            up_interpolate(src, 2, 3, BS)

    def test_gain_is_one_for_bspline(self):
        assert up_gain(2, 2, 4, 4, BS) == pytest.approx(1.0, abs=1e-12)
        assert up_gain(3, 5, 8, 11, BS) == pytest.approx(1.0, abs=1e-12)

    def test_gain_above_one_for_catmullrom(self):
        assert up_gain(2, 2, 5, 5, CR) > 1.0


class TestNonExpansiveness:
    def test_thousand_random_pairs(self):
        report = verify_upinterp_nonexpansive(trials=1000, seed=0)
        assert report.violations == 0
        assert report.trials == 1000

    def test_equal_inputs_trivial(self):
        src = TokenMap(Rng(30).uniform(-1, 1, (2, 3, 2)))
        a = up_interpolate(src, 5, 5, BS)
        b = up_interpolate(src, 5, 5, BS)
        assert inf_norm_diff(a, b) == 0.0

    def test_constant_shift_is_tight(self):
        rng = Rng(24)
        x = rng.uniform(-2, 2, (3, 4, 2))
        eps = 1e-3
        a = up_interpolate(TokenMap(x), 7, 9, BS)
        b = up_interpolate(TokenMap(x + eps), 7, 9, BS)
        assert inf_norm_diff(a, b) == pytest.approx(eps, rel=1e-10)


class TestPyramidUp:
    def test_constant_propagation_single_step(self):
        sched = PyramidSchedule(alpha=2, num_scales=2)
        x_init = TokenMap(np.full((1, 1, 3), 0.7))
        x1 = TokenMap(np.full((1, 1, 3), -1.2))
        y = pyramid_up(x_init, [x1], sched, BS)
        assert len(y) == 2
        assert (y[0].data == x_init.data).all()
        assert y[1].shape == (2, 2, 3)
        assert np.allclose(y[1].data, -1.2, atol=1e-14)

    def test_output_sizes_alpha2(self):
        sched = PyramidSchedule(alpha=2, num_scales=3)
        rng = Rng(25)
        x_init = TokenMap(rng.uniform(-1, 1, (1, 1, 2)))
        maps = [TokenMap(rng.uniform(-1, 1, (s, s, 2))) for s in (1, 2)]
        y = pyramid_up(x_init, maps, sched, BS)
        assert [(t.height, t.width) for t in y] == [(1, 1), (2, 2), (4, 4)]

    def test_matches_oracle(self):
        sched = PyramidSchedule(alpha=2, num_scales=4)
        rng = Rng(26)
        x_init = TokenMap(rng.uniform(-1, 1, (1, 1, 3)))
        maps = [TokenMap(rng.uniform(-1, 1, (s, s, 3))) for s in (1, 2, 4)]
        y = pyramid_up(x_init, maps, sched, BS)
        assert (y[0].data == x_init.data).all()
        for r, m in enumerate(maps, start=1):
            nxt = sched.size(r + 1)
            assert np.allclose(y[r].data, up_interpolate_oracle(m.data, nxt, nxt), atol=1e-12)

    def test_size_mismatch_rejected(self):
        sched = PyramidSchedule(alpha=2, num_scales=3)
        x_init = TokenMap(np.zeros((1, 1, 2)))
        wrong = TokenMap(np.zeros((3, 3, 2)))
        with pytest.raises(Exception):
            pyramid_up(x_init, [wrong], sched, BS)
