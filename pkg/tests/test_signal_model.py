import json

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pencil_prony.errors import InputError
from pencil_prony.signal_model import (ExponentialSum, NoiseSpec, evaluate, evaluate_many,
                                       load_grid, load_signal, paper_test_family, sample_grid,
                                       save_grid, save_signal)


def mp_value(t, c, k, dps=40):
    """Direct summation in extended precision."""
    with mpmath.workdps(dps):
        total = mpmath.mpc(0)
        for tj, cj in zip(t, c):
            phase = sum(mpmath.mpf(float(a)) * int(b) for a, b in zip(tj, k))
            total += mpmath.mpc(cj.real, cj.imag) * mpmath.expj(-2 * mpmath.pi * phase)
        return complex(total)


@pytest.mark.parametrize("t, k, expected", [
    (0.0, 7, 1.0),
    (0.5, 3, -1.0),
    (0.25, 1, -1j),
])
def test_evaluate_single_term(t, k, expected):
    sig = ExponentialSum(t=[[t]], c=[1.0])
    assert abs(evaluate(sig, [k]) - expected) < 1e-15


def test_evaluate_matches_extended_precision_oracle():
    sig = paper_test_family(2, 2)
    for k in [(1, 1), (-3, 4), (20, -21), (1000, 999)]:
        assert abs(evaluate(sig, k) - mp_value(sig.t, sig.c, k)) < 1e-12


def test_evaluate_dimension_mismatch():
    with pytest.raises(InputError):
        evaluate(paper_test_family(2, 2), [1, 2, 3])


@given(st.lists(st.floats(0, 0.999999, allow_nan=False), min_size=2, max_size=2),
       st.integers(-10 ** 6, 10 ** 6), st.integers(-10 ** 6, 10 ** 6))
def test_large_arguments_keep_accuracy(t, k1, k2):
    sig = ExponentialSum(t=[t], c=[1.5 - 0.5j])
    got = evaluate(sig, [k1, k2])
    # the double product t*k alone carries |k| eps absolute phase error
    bound = 8 * np.pi * abs(sig.c[0]) * (1 + abs(k1) + abs(k2)) * np.finfo(float).eps
    assert abs(got - mp_value(sig.t, sig.c, (k1, k2))) <= max(bound, 1e-14)


def test_periodic_in_t():
    t = np.array([[0.3, 0.7]])
    k = np.array([[5, -8], [13, 2]])
    base = evaluate_many(ExponentialSum(t=t, c=[1.0]), k)
    # shift by a full period before reduction; compare against the direct formula
    direct = np.exp(-2j * np.pi * (k @ (t[0] + 1.0)))
    np.testing.assert_allclose(base, direct, atol=1e-13)


@pytest.mark.parametrize("d, m", [(1, 1), (2, 2), (2, 5), (3, 5)])
def test_triangle_bound(d, m):
    sig = paper_test_family(d, m)
    grid = sample_grid(sig, 4)
    assert np.abs(grid.values).max() <= np.abs(sig.c).sum() * (1 + 1e-14)


def test_generating_family_d2_m5():
    sig = paper_test_family(2, 5)
    np.testing.assert_allclose(sig.t[0], [0.0, 0.5])
    np.testing.assert_allclose(sig.t[1], [0.1, 0.6])
    assert sig.c[2] == 3 + 3j


def test_generating_family_d3_m5():
    sig = paper_test_family(3, 5)
    np.testing.assert_allclose(sig.t[4], [0.04, 0.09, 0.14], atol=1e-15)


def test_generating_family_smallest():
    sig = paper_test_family(1, 1)
    assert sig.t.tolist() == [[0.0]] and sig.c.tolist() == [1 + 1j]


@pytest.mark.parametrize("t, c", [
    ([[1.0]], [1.0]),
    ([[-0.1]], [1.0]),
    ([[0.2], [0.2]], [1.0, 2.0]),
    ([[0.2]], [0.0]),
    ([[0.2]], [1.0, 2.0]),
])
def test_invalid_sums_rejected(t, c):
    with pytest.raises(InputError):
        ExponentialSum(t=t, c=c)


def test_exponential_sum_is_immutable():
    sig = paper_test_family(2, 2)
    with pytest.raises(ValueError):
        sig.t[0, 0] = 0.9


def test_noiseless_grid_equals_evaluate():
    sig = paper_test_family(2, 3)
    grid = sample_grid(sig, 3)
    for k in [(-3, -3), (0, 0), (4, 4), (2, -1)]:
        assert grid.at(k) == evaluate(sig, k)


def test_noise_bound_and_presence():
    sig = paper_test_family(2, 5)
    clean = sample_grid(sig, 6)
    noisy = sample_grid(sig, 6, NoiseSpec(1e-6, 3))
    rel = np.abs(noisy.values - clean.values) / np.abs(clean.values)
    assert rel.max() <= 1e-6
    assert rel.max() > 1e-7


def test_noise_deterministic_in_seed():
    sig = paper_test_family(3, 2)
    a = sample_grid(sig, 3, NoiseSpec(1e-3, 7))
    b = sample_grid(sig, 3, NoiseSpec(1e-3, 7))
    c = sample_grid(sig, 3, NoiseSpec(1e-3, 8))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_negative_noise_rejected():
    with pytest.raises(InputError):
        NoiseSpec(-1e-3)


@pytest.mark.parametrize("suffix", [".grid", ".json"])
def test_grid_round_trip(tmp_path, suffix):
    grid = sample_grid(paper_test_family(2, 3), 4, NoiseSpec(1e-4, 2))
    path = tmp_path / f"g{suffix}"
    save_grid(grid, path, meta={"manifest": "x"})
    back = load_grid(path)
    assert back.n == grid.n and back.d == grid.d and back.epsilon == grid.epsilon
    assert np.array_equal(back.values, grid.values)


def test_grid_box_size_d3_n20():
    sig = paper_test_family(3, 5)
    assert sample_grid(sig, 20).values.size == 42 ** 3 == 74088


def test_grid_truncated_file_rejected(tmp_path):
    grid = sample_grid(paper_test_family(1, 1), 2)
    path = tmp_path / "g.grid"
    save_grid(grid, path)
    path.write_bytes(path.read_bytes()[:-16])
    with pytest.raises(InputError):
        load_grid(path)


def test_signal_round_trip(tmp_path):
    sig = paper_test_family(3, 4)
    save_signal(sig, tmp_path / "s.json")
    back = load_signal(tmp_path / "s.json")
    assert np.array_equal(back.t, sig.t) and np.array_equal(back.c, sig.c)
    data = json.loads((tmp_path / "s.json").read_text())
    assert data["d"] == 3 and data["m"] == 4 and len(data["c"][0]) == 2
