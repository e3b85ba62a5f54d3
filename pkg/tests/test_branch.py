import mpmath
import numpy as np
import pytest

from critq.branch import (FIT_FOUND, BranchPairModel, branch_pair_expand, branch_pair_search)
from critq.errors import DomainError, ValidationError

RADIUS_MAX = 1 / 0.91085


def _taylor_oracle(m: BranchPairModel, order: int):
    a, b = mpmath.mpf(m.a), mpmath.mpf(m.b)

    def f(x):
        w = (x + a) ** 2 + b ** 2
        return mpmath.sqrt(w) * (m.A1 + m.A2 * w)
    return mpmath.taylor(f, 0, order)


@pytest.mark.parametrize("params", [(0.3, 0.8, -0.02, 0.005), (-0.6, 0.4, 1.0, -2.0),
                                    (0.0, 1.1, 0.3, 0.1), (0.7, 0.0, 1.0, 1.0)])
def test_expansion_matches_taylor(params):
    m = BranchPairModel(*params)
    with mpmath.workprec(200):
        ref = _taylor_oracle(m, 12)
    got = branch_pair_expand(m, 12, prec=200)
    for x, y in zip(got, ref):
        assert abs(x - y) <= 1e-40 * max(1, abs(y))


def test_expansion_errors():
    with pytest.raises(DomainError):
        branch_pair_expand(BranchPairModel(0.0, 0.0, 1.0, 1.0), 4)
    with pytest.raises(ValidationError):
        BranchPairModel(0.1, -0.2, 1.0, 1.0)


def test_search_round_trip():
    truth = BranchPairModel(0.3, 0.8, -0.02, 0.005)
    c = branch_pair_expand(truth, 40)
    tail = [(n, float(c[n])) for n in range(21, 33)]
    model, report = branch_pair_search(tail, RADIUS_MAX)
    assert report.verdict == FIT_FOUND
    np.testing.assert_allclose([model.a, model.b, model.A1, model.A2],
                               [truth.a, truth.b, truth.A1, truth.A2], rtol=1e-2)
    assert model.r < RADIUS_MAX


def test_search_respects_radius_constraint():
    # a pair outside the allowed disc cannot be reproduced by one inside it
    truth = BranchPairModel(-1.4, 0.5, -0.02, 0.005)
    c = branch_pair_expand(truth, 200)
    tail = [(n, float(c[n])) for n in (40, 80, 120, 160, 200)]
    model, report = branch_pair_search(tail, 1.0)
    assert model.r < 1.0
    assert report.max_misfit == max(report.misfits)


def test_search_input_errors():
    tail = [(n, -1.0 / n ** 3) for n in range(21, 26)]
    with pytest.raises(ValidationError):
        branch_pair_search(tail, 0.0)
    with pytest.raises(ValidationError):
        branch_pair_search(tail, -1.0)
    with pytest.raises(ValidationError):
        branch_pair_search([], 1.0)
    with pytest.raises(ValidationError):
        branch_pair_search(tail[:3], 1.0)
    with pytest.raises(ValidationError):
        branch_pair_search([(5, -1.0)] + tail, 1.0)
