import numpy as np
import pytest
from scipy.stats import ttest_ind

from seqfusion.synthgen import (
    ArmaSpec,
    block_plan,
    cells_from_axes,
    draw_sources,
    gen_arma,
    gen_four_block_dataset,
)


class TestArma:
    def test_white_noise_mean(self):
        x = gen_arma(ArmaSpec((0.0,), (0.0,)), 10000, seed=0)
        assert abs(x.mean()) <= 3 * 1.0 / 100

    def test_ar1_lag_one_autocorrelation(self):
        x = gen_arma(ArmaSpec((0.09,), (0.0,)), 10000, seed=1)
        x = x - x.mean()
        rho = np.dot(x[:-1], x[1:]) / np.dot(x, x)
        assert abs(rho - 0.09) < 0.03

    def test_max_coefficients_bounded(self):
        spec = ArmaSpec((0.1,) * 5, (0.1,) * 5)
        x = gen_arma(spec, 100_000, seed=2)
        assert np.all(np.isfinite(x)) and np.abs(x).max() < 20

    def test_running_variance_stable(self):
        spec = ArmaSpec((0.1, -0.05, 0.08), (0.1, 0.02))
        x = gen_arma(spec, 20_000, seed=3)
        v = x.reshape(-1, 1000).var(axis=1)
        assert v.max() / v.min() < 3

    def test_deterministic(self):
        spec = ArmaSpec((0.05,), (-0.02, 0.03))
        assert np.array_equal(gen_arma(spec, 50, 7), gen_arma(spec, 50, 7))

    def test_ma_recursion_by_hand(self):
        # x_t = e_t + 0.1 e_{t-1}: differences against the filtered noise must vanish
        rng = np.random.default_rng(4)
        e = rng.normal(0, 1.0, 30 + 100)
        x = gen_arma(ArmaSpec((0.0,), (0.1,)), 30, seed=4)
        assert np.allclose(x, e[100:] + 0.1 * e[99:-1])

    @pytest.mark.parametrize("alpha,beta", [((0.2,), (0.0,)), ((), (0.0,)), ((0.0,) * 6, (0.0,))])
    def test_invalid_specs(self, alpha, beta):
        with pytest.raises(ValueError):
            ArmaSpec(alpha, beta)


@pytest.fixture(scope="module")
def default_data():
    return gen_four_block_dataset(2000, 10, 5, 100, seed=0)


class TestFourBlock:
    def test_block_arithmetic(self, default_data):
        assert np.bincount(default_data.groups)[1:].tolist() == [500] * 4
        assert (default_data.labels == "T").sum() == 1000
        assert default_data.static.shape == (2000, 10) and default_data.dynamic.shape == (2000, 5, 100)

    def test_block_labels(self, default_data):
        for g, label in zip(range(1, 5), "TTFF"):
            assert set(default_data.labels[default_data.groups == g]) == {label}

    def test_remainder_dropped(self):
        assert sum(b.count for b in block_plan(2003)) == 2000
        with pytest.raises(ValueError):
            block_plan(3)

    def test_deterministic(self):
        a = gen_four_block_dataset(40, 3, 2, 10, seed=5)
        b = gen_four_block_dataset(40, 3, 2, 10, seed=5)
        assert np.array_equal(a.static, b.static) and np.array_equal(a.dynamic, b.dynamic)
        c = gen_four_block_dataset(40, 3, 2, 10, seed=6)
        assert not np.array_equal(a.static, c.static)

    def test_static_sources_follow_blocks(self):
        data = gen_four_block_dataset(4000, 4, 1, 5, seed=1)
        src = draw_sources(4, 1, seed=1)
        for g, label in zip(range(1, 5), "TFFF"):
            m = data.static[data.groups == g].mean(axis=0)
            assert np.allclose(m, src.static[label].mu, atol=0.2)

    def test_blocks_three_and_four_exchangeable(self):
        rejections = 0
        seeds = range(20)
        for s in seeds:
            d = gen_four_block_dataset(400, 3, 1, 5, seed=s)
            p = ttest_ind(d.static[d.groups == 3], d.static[d.groups == 4]).pvalue
            rejections += int((p < 0.01 / 3).any())
        assert rejections <= 1

    def test_unimodal_ceiling_by_construction(self, default_data):
        # a perfect static-only rule (N_T vs N_F) gets blocks 1, 3, 4 right and block 2 wrong
        src = draw_sources(10, 5, seed=0)
        assert src.static["T"].mu.shape == (10,)
        assert np.mean(default_data.groups != 2) == 0.75


def test_cells_from_axes():
    cells = cells_from_axes((100,), (10, 50), (0.2, 0.5, 0.8), 10)
    assert len(cells) == 6
    assert (100, 10, 8, 2) in cells and (100, 50, 2, 8) in cells
