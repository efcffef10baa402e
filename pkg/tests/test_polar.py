import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from npdel import oracle
from npdel.npd import bsc_kernel
from npdel.polar import (PolarCodeSpec, bit_reversal_permutation, path_metric_update,
                         polar_transform, posteriors_teacher_forced, sc_decode, scl_decode)
from npdel.polar.transform import butterfly_numba, butterfly_numpy


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x)))


# -- independent matrix oracles ------------------------------------------

F2 = np.array([[1, 0], [1, 1]], dtype=np.int64)


def reverse_shuffle(N):
    # s R_N = (s_1, s_3, ..., s_{N-1}, s_2, s_4, ..., s_N)
    R = np.zeros((N, N), dtype=np.int64)
    for j in range(N // 2):
        R[2 * j, j] = 1
        R[2 * j + 1, N // 2 + j] = 1
    return R


def bit_reversal_matrix(N):
    if N == 2:
        return np.eye(2, dtype=np.int64)
    return reverse_shuffle(N) @ np.kron(np.eye(2, dtype=np.int64), bit_reversal_matrix(N // 2))


def generator_matrix(N):
    Fn = np.array([[1]], dtype=np.int64)
    while Fn.shape[0] < N:
        Fn = np.kron(Fn, F2)
    return (bit_reversal_matrix(N) @ Fn) % 2


def test_bit_reversal_examples():
    assert list(bit_reversal_permutation(1)) == [0, 1]
    assert list(bit_reversal_permutation(2)) == [0, 2, 1, 3]
    assert list(bit_reversal_permutation(3)) == [0, 4, 2, 6, 1, 5, 3, 7]


@pytest.mark.parametrize("n", range(1, 8))
def test_bit_reversal_matches_recursion_and_is_involution(n):
    N = 1 << n
    perm = bit_reversal_permutation(n)
    np.testing.assert_array_equal(perm[perm], np.arange(N))
    x = np.arange(N)
    np.testing.assert_array_equal(x @ bit_reversal_matrix(N), x[perm])


def test_polar_transform_examples():
    np.testing.assert_array_equal(polar_transform(np.zeros(8)), np.zeros(8))
    np.testing.assert_array_equal(polar_transform([1, 0]), [1, 0])
    np.testing.assert_array_equal(polar_transform([0, 1]), [1, 1])
    np.testing.assert_array_equal(polar_transform([1, 1, 1, 1]), [0, 0, 0, 1])


@pytest.mark.parametrize("N", [2, 4, 8, 16, 32, 64])
def test_polar_transform_matches_generator_matrix(N):
    rng = np.random.default_rng(N)
    x = rng.integers(0, 2, size=(50, N))
    np.testing.assert_array_equal(polar_transform(x), (x @ generator_matrix(N)) % 2)


@pytest.mark.parametrize("N", [2 ** k for k in range(1, 11)])
def test_polar_transform_involution(N):
    x = np.random.default_rng(N).integers(0, 2, size=(1000, N), dtype=np.uint8)
    np.testing.assert_array_equal(polar_transform(polar_transform(x)), x)


def test_butterfly_backends_agree():
    x = np.random.default_rng(0).integers(0, 2, size=(20, 64), dtype=np.uint8)
    np.testing.assert_array_equal(butterfly_numba(x), butterfly_numpy(x))


def test_polar_transform_rejects_bad_length():
    with pytest.raises(ValueError):
        polar_transform([1, 0, 1])


def test_path_metric_update():
    assert path_metric_update(0.5, 0.0, 0) == pytest.approx(0.5 + np.log(2), abs=1e-15)
    assert path_metric_update(0.5, 0.0, 1) == pytest.approx(0.5 + np.log(2), abs=1e-15)
    assert path_metric_update(0.0, 30.0, 1) == pytest.approx(np.log1p(np.exp(-30.0)), rel=1e-12)
    assert path_metric_update(0.0, 30.0, 1) < 1e-12
    assert path_metric_update(0.0, 30.0, 0) == pytest.approx(30.0 + np.log1p(np.exp(-30.0)))
    assert np.isfinite(path_metric_update(0.0, 1e4, 0))


# -- SC engine against the exhaustive oracle ------------------------------


def test_all_frozen_returns_frozen_values():
    rng = np.random.default_rng(1)
    vals = rng.integers(0, 2, 8)
    spec = PolarCodeSpec.from_frozen_set(8, range(8), vals)
    k = bsc_kernel(0.1)
    for _ in range(5):
        u, _ = sc_decode(spec, k, k.embed(rng.integers(0, 2, 8)))
        np.testing.assert_array_equal(u, vals)


@pytest.mark.parametrize("N", [4, 8])
def test_sc_matches_memoryless_oracle(N):
    rng = np.random.default_rng(N)
    p = 0.1
    k = bsc_kernel(p)
    spec = PolarCodeSpec.from_frozen_set(N, [0])
    worst = 0.0
    for _ in range(50):
        y = rng.integers(0, 2, N)
        u_hat, llr = sc_decode(spec, k, k.embed(y))
        for i in range(N):
            post = oracle.memoryless_posterior(y, p, u_hat[:i], i)
            worst = max(worst, abs(post.p1 - sigmoid(llr[i])), abs(post.p0 - sigmoid(-llr[i])))
    assert worst <= 1e-9


def test_sc_batched_equals_single():
    rng = np.random.default_rng(3)
    k = bsc_kernel(0.2)
    spec = PolarCodeSpec.from_frozen_set(16, [0, 1, 2, 4, 8])
    ys = rng.integers(0, 2, (10, 16))
    ub, lb = sc_decode(spec, k, k.embed(ys))
    for j in range(10):
        u, ll = sc_decode(spec, k, k.embed(ys[j]))
        np.testing.assert_array_equal(u, ub[j])
        np.testing.assert_array_equal(ll, lb[j])


def test_sc_width_mismatch():
    spec = PolarCodeSpec.from_frozen_set(4, [])
    with pytest.raises(ValueError):
        sc_decode(spec, bsc_kernel(0.1), np.zeros((4, 3)))


def test_scl_l1_equals_sc():
    rng = np.random.default_rng(4)
    k = bsc_kernel(0.15)
    for N in (8, 32):
        spec = PolarCodeSpec.from_frozen_set(N, rng.choice(N, N // 2, replace=False))
        e = k.embed(rng.integers(0, 2, (500, N)))
        np.testing.assert_array_equal(scl_decode(spec, k, e, 1), sc_decode(spec, k, e)[0])


def test_scl_l1_tie_goes_to_zero():
    # zero LLRs everywhere: SC picks 0, SCL(L=1) must too
    spec = PolarCodeSpec.from_frozen_set(8, [])
    k = bsc_kernel(0.5)
    e = np.zeros((8, 1))
    np.testing.assert_array_equal(scl_decode(spec, k, e, 1), sc_decode(spec, k, e)[0])


def test_scl_rejects_empty_list():
    with pytest.raises(ValueError):
        scl_decode(PolarCodeSpec.from_frozen_set(4, []), bsc_kernel(0.1), np.zeros((4, 1)), 0)


def test_scl_full_list_is_map():
    rng = np.random.default_rng(5)
    p = 0.2
    k = bsc_kernel(p)
    spec = PolarCodeSpec.from_frozen_set(4, [0, 2], [1, 0])
    info = spec.info_set
    cands = []
    for bits in itertools.product([0, 1], repeat=2):
        u = spec.frozen_values.copy()
        u[info] = bits
        cands.append(u)
    cands = np.array(cands)
    X = polar_transform(cands)
    for _ in range(50):
        y = rng.integers(0, 2, 4)
        lik = oracle.bsc_likelihoods(X, y, p)
        u_hat = scl_decode(spec, k, k.embed(y), 4)
        got = oracle.bsc_likelihoods(polar_transform(u_hat)[None], y, p)[0]
        assert np.any(np.all(cands == u_hat, axis=1))
        assert got == pytest.approx(lik.max(), rel=1e-12)


def test_scl_list_paths_distinct_and_metrics_consistent():
    rng = np.random.default_rng(6)
    k = bsc_kernel(0.1)
    spec = PolarCodeSpec.from_frozen_set(16, [0, 1, 2, 3, 4, 8])
    y = rng.integers(0, 2, 16)
    e = k.embed(y)
    _, paths, metrics = scl_decode(spec, k, e, 8, return_list=True)
    active = np.isfinite(metrics)
    assert active.sum() == 8
    assert len({tuple(p) for p in paths[active]}) == active.sum()
    for path, m in zip(paths[active], metrics[active]):
        lam = posteriors_teacher_forced(k, e, path)
        steps = path_metric_update(0.0, lam, path)
        assert (steps >= 0).all()  # running metric is nondecreasing
        assert m == pytest.approx(steps.sum(), rel=1e-9)


def test_teacher_forced_equals_sc_on_own_decisions():
    rng = np.random.default_rng(7)
    k = bsc_kernel(0.1)
    spec = PolarCodeSpec.from_frozen_set(16, [])
    e = k.embed(rng.integers(0, 2, (20, 16)))
    u_hat, llr = sc_decode(spec, k, e)
    np.testing.assert_array_equal(posteriors_teacher_forced(k, e, u_hat), llr)


def test_teacher_forced_matches_oracle_n8():
    rng = np.random.default_rng(8)
    p = 0.1
    k = bsc_kernel(p)
    worst = 0.0
    for _ in range(20):
        u = rng.integers(0, 2, 8).astype(np.uint8)
        y = rng.integers(0, 2, 8)
        lam = posteriors_teacher_forced(k, k.embed(y), u)
        again = posteriors_teacher_forced(k, k.embed(y), u)
        np.testing.assert_array_equal(lam, again)
        for i in range(8):
            worst = max(worst, abs(oracle.memoryless_posterior(y, p, u[:i], i).p1 - sigmoid(lam[i])))
    assert worst <= 1e-9


def test_teacher_forced_length_mismatch():
    with pytest.raises(ValueError):
        posteriors_teacher_forced(bsc_kernel(0.1), np.zeros((8, 1)), np.zeros(4))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.lists(st.integers(0, 1), min_size=1 << n,
                                                    max_size=1 << n)))
def test_polar_involution_property(bits):
    x = np.array(bits, dtype=np.uint8)
    np.testing.assert_array_equal(polar_transform(polar_transform(x)), x)


def test_code_spec_json_round_trip(tmp_path):
    spec = PolarCodeSpec.from_frozen_set(8, [0, 1, 4], [1, 0, 1])
    spec.save(tmp_path / "c.json")
    back = PolarCodeSpec.load(tmp_path / "c.json")
    np.testing.assert_array_equal(back.frozen, spec.frozen)
    np.testing.assert_array_equal(back.frozen_values, spec.frozen_values)
    assert back.rate == 5 / 8
