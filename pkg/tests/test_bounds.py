import itertools
import math

import pytest

from geoloops.bounds import (
    GeometryParams,
    InvalidParameter,
    ball_count_bound,
    bound_report,
    contractibility_params,
    length_bound,
    net_size_bound,
    rescale,
    width_bound,
)
from geoloops.logscalar import LogScalar, Ordering


def closed_form_ball_count(eps, D, n):
    return 12**n * n * math.exp(D * (n - 1)) / (2 ** (n - 1) * (n - 1) * eps**n)


def test_ball_count_examples():
    assert math.isclose(ball_count_bound(1, 1, 2).to_float(), 144 * math.e, rel_tol=1e-9)
    assert math.isclose(ball_count_bound(1, 1e-12, 2).to_float(), 144.0, rel_tol=1e-9)
    for eps, D, n in [(0.3, 2.0, 3), (1.7, 0.5, 4), (0.01, 1.0, 2)]:
        assert math.isclose(ball_count_bound(eps, D, n).to_float(), closed_form_ball_count(eps, D, n), rel_tol=1e-9)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_ball_count_homogeneity(n):
    eps0 = 0.37
    ratio = ball_count_bound(2 * eps0, 1.3, n).to_float() / ball_count_bound(eps0, 1.3, n).to_float()
    assert math.isclose(ratio, 2.0**-n, rel_tol=1e-12)
    # N * eps^n is constant in eps
    vals = [ball_count_bound(e, 1.3, n).to_float() * e**n for e in (0.01, 0.2, 3.0)]
    assert max(vals) / min(vals) - 1 < 1e-12


def test_ball_count_monotone():
    assert ball_count_bound(0.5, 1, 2) > ball_count_bound(0.6, 1, 2)
    assert ball_count_bound(0.5, 2, 2) > ball_count_bound(0.5, 1, 2)
    assert ball_count_bound(0.5, 1, 3) > ball_count_bound(0.5, 1, 2)


def test_ball_count_rejects_bad_input():
    with pytest.raises(InvalidParameter):
        ball_count_bound(0, 1, 2)
    with pytest.raises(InvalidParameter):
        ball_count_bound(1, 1, 1)


def test_contractibility_examples():
    r, R = contractibility_params(2, 1, 1, 1, 1)
    assert math.isclose(r.to_float(), math.exp(-1), rel_tol=1e-12)
    assert math.isclose(R.to_float(), math.e, rel_tol=1e-12)
    r, R = contractibility_params(3, 1.0, 2.5, 0.7, 1.9)
    assert math.isclose(r.to_float() * R.to_float(), 0.7 * 1.9 / 2.5, rel_tol=1e-12)
    r1, R1 = contractibility_params(2, 0.2, 1)
    r2, R2 = contractibility_params(2, 0.4, 1)
    assert math.isclose(r2.to_float() / r1.to_float(), 4.0, rel_tol=1e-12)
    assert math.isclose(R2.to_float() / R1.to_float(), 0.5, rel_tol=1e-12)
    with pytest.raises(InvalidParameter):
        contractibility_params(2, -1, 1)


def test_net_size_examples():
    eps = 0.37
    x = net_size_bound(10, eps, eps)
    assert x.lo <= 1e19 <= x.hi
    assert math.isclose(x.log_value(), 19 * math.log(10), rel_tol=1e-15)
    assert net_size_bound(1, 5.0, 0.1).compare(1.0) is Ordering.INDISTINGUISHABLE
    big = net_size_bound(10, 1, 0.01)
    assert math.isclose(big.log_value() / math.log(10), 1801, rel_tol=1e-12)


def _oracle_loglog_width(n, v, D, c, a, c1=1.0, c2=1.0):
    # independent float evaluation of the same chain in log space
    ln_r = math.log(c1 * v * min(1, v) / D) - (n - 1) * D
    r = math.exp(ln_r)
    R = c2 * math.exp((n - 1) * D) / v
    eps = r / (4 * a)
    ln_N = n * math.log(12) + math.log(n) + D * (n - 1) - (n - 1) * math.log(2) - math.log(n - 1) - n * math.log(eps)
    ln_Nnet = (18 * c * D / eps + 1) * ln_N
    ln_W = math.log(2) + ln_Nnet + math.log(2 * R + 1) + math.log(r / a)  # +1 is negligible here
    return math.log(ln_W)


def test_width_regression_constant():
    wb = width_bound(GeometryParams(n=2, v=1, D=1, c=2, a=4))
    assert math.isclose(wb.W.loglog_value(), _oracle_loglog_width(2, 1, 1, 2, 4), rel_tol=1e-12)
    # frozen golden value
    assert math.isclose(wb.W.loglog_value(), 9.960553605404128, rel_tol=1e-12)
    assert wb.W.compare(wb.envelope) is Ordering.LESS


def test_width_monotone_probes():
    base = GeometryParams(n=2, v=1, D=1, c=2, a=4)
    assert width_bound(base).W < width_bound(base.replace(c=4)).W
    assert width_bound(base).W > width_bound(base.replace(v=2)).W


def test_length_bound_examples():
    p = GeometryParams(D=1, delta=1e-300, l=1)
    assert math.isclose(length_bound(p, 0.0).to_float(), 7.0, rel_tol=1e-12)
    p2 = GeometryParams(D=1, delta=0.5, l=2)
    assert math.isclose(length_bound(p2, 1.0).to_float(), 33.5, rel_tol=1e-12)
    slopes = [length_bound(GeometryParams(D=1, delta=0.1, l=l), 2.0).to_float() for l in (1, 2, 3)]
    assert math.isclose(slopes[1] - slopes[0], 2 * (5 * 2 + 3), rel_tol=1e-12)
    assert math.isclose(slopes[2] - slopes[1], 2 * (5 * 2 + 3), rel_tol=1e-12)


def test_rescale_examples():
    assert rescale(-1, 1.5, 2.0, 1.0, 3) == (1.5, 2.0, 1.0)
    assert rescale(-4, 1, 1, 1, 2) == (16, 4, 4)
    once = rescale(-1, 0.3, 0.7, 0.5, 2)
    assert rescale(-1, *once, 2) == once
    with pytest.raises(InvalidParameter):
        rescale(0.0, 1, 1, 1, 2)


def test_params_validation():
    with pytest.raises(InvalidParameter):
        GeometryParams(a=2.0)
    with pytest.raises(InvalidParameter):
        GeometryParams(D=1.0, d=2.0)
    p = GeometryParams(D=5.0)
    assert p.delta == pytest.approx(5e-3) and p.d == 5.0


def test_report_rescales_strong_curvature():
    rep = bound_report(GeometryParams(k=-4.0, v=1.0, D=1.0, d=1.0))
    assert rep.rescaled == {"v": 16.0, "D": 4.0, "d": 4.0}
    data = rep.to_json()
    assert data["W_bound_level2"]["level"] == 2
    assert set(data["r"]) == {"level", "lo", "hi"}


GRID = list(itertools.product([2, 3, 4], [1, 5, 10], [0.1, 1, 10], [1, 10, 100]))


def test_grid_is_finite_and_enveloped():
    for n, D, v, c in GRID:
        wb = width_bound(GeometryParams(n=n, D=D, v=v, c=c))
        L = length_bound(GeometryParams(n=n, D=D, v=v, c=c), wb.W)
        for x in (wb.W, wb.envelope, L):
            assert math.isfinite(x.lo) and math.isfinite(x.hi)
        assert wb.W <= wb.envelope
