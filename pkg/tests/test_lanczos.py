import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pencil_prony.assembly import build_T, index_set
from pencil_prony.errors import ConvergenceError, InputError
from pencil_prony.reduced_svd import dense_svd, lanczos_svd

from conftest import family_grid


def cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_identity_early_stop_restarts():
    s = lanczos_svd(np.eye(2), p1=np.array([1.0, 0.0]))
    assert s.rank == 2
    np.testing.assert_allclose(s.sigma, [1, 1], rtol=1e-14)
    bd = s.info["bidiagonal"]
    # beta_2 = 0 after one step; the restart continues with a fresh v
    assert bd.restarted and s.restarts >= 1


def test_all_ones_rank_one():
    s = lanczos_svd(np.ones((2, 2)), rng_seed=3)
    assert s.rank == 1 and abs(s.sigma[0] - 2) < 1e-14
    assert s.restarts == 1


def test_family_desk_scale():
    _, grid = family_grid(3, 5, 6)
    T = build_T(grid, index_set(6, 3))
    s, ref = lanczos_svd(T, expected_rank=5), dense_svd(T)
    assert s.rank == ref.rank == 5
    assert np.max(np.abs(s.sigma - ref.sigma)) <= 1e-10 * ref.sigma[0]


@pytest.mark.parametrize("n", [1, 2, 5, 17, 32, 64])
def test_full_rank_random(rng, n):
    A = cplx(rng, n, n)
    s = lanczos_svd(A, rng_seed=n)
    ref = np.linalg.svd(A, compute_uv=False)
    assert s.rank == n
    np.testing.assert_allclose(s.sigma, ref, rtol=1e-9)
    assert np.linalg.norm(s.U.conj().T @ s.U - np.eye(n)) <= 1e-10 * np.sqrt(n)


@given(st.integers(2, 10), st.integers(1, 9), st.integers(0, 2 ** 31))
def test_low_rank_rectangular(rows, r, seed):
    rng = np.random.default_rng(seed)
    r = min(r, rows)
    A = cplx(rng, rows, r) @ cplx(rng, r, rows + 3)
    s = lanczos_svd(A, rng_seed=seed)
    ref = np.linalg.svd(A, compute_uv=False)
    assert s.rank == r
    assert np.max(np.abs(s.sigma - ref[:r])) <= 1e-10 * ref[0]
    assert s.residual <= 1e-10 * np.linalg.norm(A)


@given(st.integers(1, 8), st.integers(0, 2 ** 31))
def test_any_start_vector_full_rank(n, seed):
    rng = np.random.default_rng(seed)
    A = cplx(rng, n, n)
    p1 = np.zeros(n, complex)
    p1[seed % n] = 1.0
    assert lanczos_svd(A, p1=p1, rng_seed=seed).rank == n


def test_start_in_small_invariant_subspace():
    A = np.diag([5.0, 4.0, 3.0, 0.0, 0.0])
    p1 = np.array([1.0, 0, 0, 1.0, 0])
    s = lanczos_svd(A, p1=p1)
    assert s.rank == 3
    np.testing.assert_allclose(s.sigma, [5, 4, 3], rtol=1e-13)


def test_zero_start_rejected():
    with pytest.raises(InputError):
        lanczos_svd(np.eye(3), p1=np.zeros(3))


def test_iteration_cap_carries_state(rng):
    with pytest.raises(ConvergenceError) as exc:
        lanczos_svd(cplx(rng, 10, 10), max_iter=3)
    assert exc.value.state["U"].shape[0] == 10


def test_zero_matrix():
    assert lanczos_svd(np.zeros((3, 3))).rank == 0
