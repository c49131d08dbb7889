import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from tcintent import _accel, kernels
from tests.oracles import brute_force_lcs, dp_levenshtein

seqs = st.lists(st.integers(0, 5), max_size=10)


def _arr(xs):
    return np.asarray(xs, dtype=np.int64)


@given(seqs, seqs)
def test_lcs_matches_exhaustive_oracle(a, b):
    assert kernels.lcs_length(_arr(a), _arr(b)) == brute_force_lcs(a, b)


@given(seqs, seqs)
def test_levenshtein_matches_full_matrix_oracle(a, b):
    assert kernels.levenshtein(_arr(a), _arr(b)) == dp_levenshtein(a, b)


@settings(max_examples=50)
@given(st.lists(st.integers(0, 9), max_size=40), st.lists(st.integers(0, 9), max_size=40))
def test_compiled_and_pure_paths_agree(a, b):
    for fn in (kernels.lcs_length, kernels.levenshtein):
        assert fn(_arr(a), _arr(b)) == _accel.python_impl(fn)(_arr(a), _arr(b))


def test_kitten_sitting():
    to_ints = lambda s: _arr([ord(c) for c in s])  # noqa: E731
    assert kernels.levenshtein(to_ints("kitten"), to_ints("sitting")) == 3


def test_python_impl_is_identity_for_plain_functions():
    def f(x):
        return x

    assert _accel.python_impl(f) is f


def test_numba_switch_reflects_environment():
    assert _accel.USE_NUMBA == (not _accel.NUMBA_DISABLED and _accel.numba is not None)
    if _accel.USE_NUMBA:
        assert hasattr(kernels.lcs_length, "py_func")


def test_stat_layout():
    assert kernels.N_STATS == kernels.IN_SERVICE_CLASS + 1
    assert kernels.stat_index(kernels.LOW, kernels.OFFERED) == 9
    assert kernels.stat_index(kernels.HIGH, kernels.QUEUE_AREA) < kernels.stat_index(kernels.LOW, 0)
