import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coprobe.llmio import ActivationMatrix
from coprobe.pooling import ActivationPooler, PoolingStrategy, pool, pool_array
from oracles import pool_oracle

M = [[1, 2], [3, 4]]


@pytest.mark.parametrize("strategy,expected", [("mean", [2, 3]), ("max", [3, 4]),
                                               ("last", [3, 4])])
def test_examples(strategy, expected):
    assert pool_array(np.array(M, dtype=np.float32), strategy).tolist() == expected


def test_pool_keeps_identity():
    m = ActivationMatrix("i", "standard", np.array(M))
    p = pool(m, PoolingStrategy.mean)
    assert (p.instance_name, p.representation, p.strategy) == ("i", "standard",
                                                              PoolingStrategy.mean)
    assert p.vector.dtype == np.float64


@pytest.mark.parametrize("bad", [np.zeros((0, 3)), np.zeros((3, 0)), np.zeros(3)])
def test_empty_rejected(bad):
    with pytest.raises(ValueError):
        pool_array(bad, "mean")


def test_mean_accumulates_in_64_bit():
    x = np.full((200_000, 1), 0.1, dtype=np.float32)
    x[0] = 1e4
    expected = (1e4 + 199_999 * float(np.float32(0.1))) / 200_000
    assert pool_array(x, "mean")[0] == pytest.approx(expected, rel=1e-12)


def test_last_is_order_sensitive():
    x = np.array([[1.0, 5.0], [2.0, 0.0]])
    assert pool_array(x, "last").tolist() != pool_array(x[::-1], "last").tolist()


finite = st.floats(-1e6, 1e6, width=32)
matrices = arrays(np.float32, st.tuples(st.integers(1, 16), st.integers(1, 16)), elements=finite)


@settings(max_examples=100, deadline=None)
@given(matrices, st.randoms(use_true_random=False))
def test_properties(x, rnd):
    perm = list(range(x.shape[0]))
    rnd.shuffle(perm)
    mean, mx, last = (pool_array(x, s) for s in ("mean", "max", "last"))
    np.testing.assert_allclose(pool_array(x[perm], "mean"), mean, rtol=1e-12, atol=1e-9)
    np.testing.assert_array_equal(pool_array(x[perm], "max"), mx)
    lo = x.min(axis=0).astype(np.float64)
    assert (lo - 1e-9 <= mean).all() and (mean <= mx + 1e-9).all()
    if x.shape[0] == 1:
        np.testing.assert_array_equal(mean, x[0])
        np.testing.assert_array_equal(mx, x[0])
        np.testing.assert_array_equal(last, x[0])
    np.testing.assert_array_equal(last, x[-1])


def test_matches_naive_reference():
    rng = np.random.default_rng(1)
    for _ in range(100):
        x = rng.standard_normal((rng.integers(1, 64), rng.integers(1, 128))).astype(np.float32)
        rows = x.astype(np.float64).tolist()
        for s in ("mean", "max", "last"):
            ref = np.array(pool_oracle(rows, s))
            got = pool_array(x, s)
            if s == "mean":
                np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-15)
            else:
                np.testing.assert_array_equal(got, ref)


def test_pooler_transformer():
    mats = [np.ones((3, 4)), np.zeros((1, 4)), ActivationMatrix("a", "standard", np.eye(4))]
    X = ActivationPooler("max").fit(mats).transform(mats)
    assert X.shape == (3, 4)
    assert X[2].tolist() == [1, 1, 1, 1]
    with pytest.raises(ValueError, match="differ"):
        ActivationPooler().transform([np.ones((2, 3)), np.ones((2, 4))])
    with pytest.raises(ValueError):
        ActivationPooler("median").fit(mats)
