"""Shared hypothesis strategies."""
from hypothesis import strategies as st

from hamlearn.pauli import PauliString


def pauli_strings(n_min=1, n_max=4):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.text("IXYZ", min_size=n, max_size=n).map(PauliString)
    )


def pauli_pairs(n_min=1, n_max=4, count=2):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.tuples(*[st.text("IXYZ", min_size=n, max_size=n).map(PauliString)] * count)
    )


seeds = st.integers(0, 2**32 - 1)
