import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rlmtrack.density import (
    DensityConfig,
    DensityMatrix,
    ModulationMode,
    accumulate,
    cell_of,
    low_threshold,
    normalize,
    varpi,
)
from rlmtrack.errors import ConfigError, GeometryDomainError

W, H = 1920, 1080


def dm(rho):
    return DensityMatrix(rho=np.asarray(rho, dtype=float))


def test_cell_of_examples():
    assert cell_of(W, H, 0, 0) == 6
    assert cell_of(W, H, W / 2, H / 2) == 4
    assert cell_of(W, H, W / 3, H / 2) == 3
    assert cell_of(W, H, W / 3 + 1e-9, H / 2) == 4
    assert cell_of(W, H, W, H) == 2
    # A row boundary also goes to the lower index (the upper band).
    assert cell_of(W, H, 10, 2 * H / 3) == 0


def test_cell_of_vectorized():
    x = np.array([0.0, W / 2, W])
    y = np.array([0.0, H / 2, H])
    np.testing.assert_array_equal(cell_of(W, H, x, y), [6, 4, 2])


@pytest.mark.parametrize("p", [(-1, 5), (5, -1), (W + 1, 5), (5, H + 1)])
def test_cell_of_out_of_image(p):
    with pytest.raises(GeometryDomainError):
        cell_of(W, H, *p)


def test_varpi_ramp():
    cfg = DensityConfig()
    assert varpi(H, 0.0, cfg) == 1.0
    assert varpi(H, H / 2, cfg) == 1.5
    assert varpi(H, H, cfg) == 2.0


def test_accumulate_single_box():
    d = accumulate([(900, 500, 120, 80)], [0.9], W, H)
    expected = np.zeros(9)
    expected[4] = 0.9 * 1.5
    np.testing.assert_allclose(d.raw_rho, expected, rtol=1e-12)
    np.testing.assert_array_equal(d.rho, np.eye(9)[4])


def test_accumulate_empty():
    d = accumulate(np.zeros((0, 4)), [], W, H)
    np.testing.assert_array_equal(d.raw_rho, np.zeros(9))
    np.testing.assert_array_equal(d.rho, np.ones(9))


def test_accumulate_doubling():
    box = [(100, 300, 900, 500)]
    one = accumulate(box, [0.8], W, H)
    two = accumulate(box * 2, [0.8, 0.8], W, H)
    np.testing.assert_allclose(two.raw_rho, 2 * one.raw_rho, rtol=1e-12)


def test_accumulate_split_box_weights_by_area():
    # Box straddling the left/middle column boundary, fully in the middle band.
    box = (W / 3 - 30, 500, 120, 80)
    d = accumulate([box], [1.0], W, H)
    assert d.raw_rho[3] == pytest.approx(0.25 * 1.5)
    assert d.raw_rho[4] == pytest.approx(0.75 * 1.5)


def test_lower_boxes_weigh_more():
    d = accumulate([(100, 50, 100, 100), (100, 900, 100, 100)], [0.9, 0.9], W, H)
    assert d.raw_rho[6] > d.raw_rho[0]


def test_normalize_examples():
    d = normalize([2, 1, 0, 0, 4, 0, 0, 0, 0])
    np.testing.assert_allclose(d.rho, [0.5, 0.25, 0, 0, 1, 0, 0, 0, 0])
    np.testing.assert_array_equal(normalize(np.full(9, 3.0)).rho, np.ones(9))
    np.testing.assert_array_equal(normalize(np.zeros(9)).rho, np.ones(9))


def test_density_matrix_is_read_only():
    d = normalize(np.arange(9.0))
    with pytest.raises(ValueError):
        d.rho[0] = 5.0
    assert d.grid().shape == (3, 3)


def test_low_threshold_examples():
    cfg = DensityConfig()
    assert low_threshold(dm(np.ones(9)), 4, cfg) == pytest.approx(0.3)
    assert low_threshold(dm(np.full(9, 0.5)), 4, cfg) == pytest.approx(0.15)
    assert low_threshold(dm(np.zeros(9)), 4, cfg) == pytest.approx(0.15)


def test_low_threshold_inverse_mode():
    cfg = DensityConfig(modulation_mode="inverse")
    assert cfg.modulation_mode is ModulationMode.INVERSE
    assert low_threshold(dm(np.ones(9)), 0, cfg) == pytest.approx(0.3)
    assert low_threshold(dm(np.zeros(9)), 0, cfg) == pytest.approx(0.45)


@pytest.mark.parametrize(
    "kw",
    [dict(tau_low=0.0), dict(tau_low=1.0), dict(rho_floor=0.0), dict(rho_floor=1.5), dict(varpi_top=3.0), dict(varpi_top=0.0)],
)
def test_bad_density_config(kw):
    with pytest.raises(ConfigError):
        DensityConfig(**kw)


def test_bad_modulation_mode():
    with pytest.raises(ValueError):
        DensityConfig(modulation_mode="sideways")


# -- properties --------------------------------------------------------------------

boxes_st = st.lists(
    st.tuples(
        st.floats(0, W - 10), st.floats(0, H - 10), st.floats(1, 600), st.floats(1, 600), st.floats(0.6, 1.0)
    ),
    min_size=0,
    max_size=12,
)


def _split(items):
    arr = np.asarray(items, dtype=float).reshape(-1, 5)
    return arr[:, :4], arr[:, 4]


@given(boxes_st)
def test_normalized_range_property(items):
    b, s = _split(items)
    d = accumulate(b, s, W, H)
    assert np.all(d.rho >= 0) and np.all(d.rho <= 1)
    assert np.all(d.raw_rho >= 0)
    assert d.rho.max() == 1.0


@given(boxes_st, st.randoms(use_true_random=False))
def test_permutation_invariance_property(items, rnd):
    b, s = _split(items)
    perm = list(range(len(b)))
    rnd.shuffle(perm)
    a = accumulate(b, s, W, H)
    p = accumulate(b[perm], s[perm], W, H)
    np.testing.assert_allclose(a.raw_rho, p.raw_rho, rtol=1e-12, atol=1e-12)


@given(boxes_st, boxes_st)
def test_additivity_property(x, y):
    bx, sx = _split(x)
    by, sy = _split(y)
    both = accumulate(np.vstack([bx, by]), np.concatenate([sx, sy]), W, H)
    np.testing.assert_allclose(
        both.raw_rho, accumulate(bx, sx, W, H).raw_rho + accumulate(by, sy, W, H).raw_rho, rtol=1e-9, atol=1e-12
    )


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 0.99), st.floats(0.05, 1.0))
def test_threshold_monotone_property(r1, r2, tau, floor):
    lo, hi = sorted([r1, r2])
    for mode, sign in (("as_written", 1), ("inverse", -1)):
        cfg = DensityConfig(tau_low=tau, rho_floor=floor, modulation_mode=mode)
        t_lo = low_threshold(dm(np.full(9, lo)), 4, cfg)
        t_hi = low_threshold(dm(np.full(9, hi)), 4, cfg)
        assert sign * (t_hi - t_lo) >= -1e-15
        if mode == "as_written":
            assert 0 < t_lo <= tau + 1e-15
