"""Basis enumeration and sparse-operator structure checks."""

import itertools
from math import comb, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosepump.fockspace import (
    FockState,
    annihilation_operator,
    build_basis,
    hop_element,
    hopping_operator,
    interaction_diagonal,
    number_operator_diagonal,
)


def brute_force_states(L, N, n_max):
    out = [
        occ
        for occ in itertools.product(range(n_max + 1), repeat=L)
        if sum(occ) == N
    ]
    return sorted(out)


class TestBuildBasis:
    def test_documented_dimensions(self):
        assert build_basis(3, 3, 3).dim == 10
        assert build_basis(9, 3, 3).dim == 165
        assert build_basis(2, 4, 2).dim == 1

    def test_lexicographic_order_and_completeness(self):
        for L, N, n_max in [(4, 3, 3), (5, 2, 1), (3, 6, 2), (6, 1, 1)]:
            basis = build_basis(L, N, n_max)
            assert list(basis.states) == brute_force_states(L, N, n_max)

    def test_count_law_uncapped(self):
        for L in range(1, 13):
            for N in range(0, 5):
                basis = build_basis(L, N, n_max=max(N, 1))
                assert basis.dim == comb(N + L - 1, N)

    def test_default_cap(self):
        assert build_basis(4, 3).n_max == 3
        assert build_basis(4, 7).n_max == 5

    def test_empty_sector_rejected(self):
        with pytest.raises(ValueError, match="empty sector"):
            build_basis(3, 7, 2)

    def test_bad_arguments_rejected(self):
        with pytest.raises(ValueError):
            build_basis(0, 1, 1)
        with pytest.raises(ValueError):
            build_basis(3, -1, 1)
        with pytest.raises(ValueError):
            build_basis(3, 2, 0)

    @given(
        L=st.integers(min_value=1, max_value=6),
        N=st.integers(min_value=0, max_value=5),
        n_max=st.integers(min_value=1, max_value=5),
    )
    @settings(max_examples=60, deadline=None)
    def test_index_round_trip(self, L, N, n_max):
        if N > L * n_max:
            with pytest.raises(ValueError):
                build_basis(L, N, n_max)
            return
        basis = build_basis(L, N, n_max)
        for i in range(basis.dim):
            assert basis.index(basis.state(i)) == i
        assert basis.index(FockState(basis.state(0))) == 0


class TestHopElement:
    def test_amplitude_rule(self):
        target, amp = hop_element((1, 2, 0), 0, n_max=3)
        assert target == (2, 1, 0)
        assert amp == pytest.approx(sqrt(2 * 2))

    def test_empty_source_is_zero(self):
        target, amp = hop_element((1, 0, 2), 0, n_max=3)
        assert target is None and amp == 0.0

    def test_cap_blocks_move(self):
        target, amp = hop_element((2, 1, 0), 0, n_max=2)
        assert target is None and amp == 0.0

    def test_bond_out_of_range(self):
        with pytest.raises(ValueError):
            hop_element((1, 1), 1, n_max=2)

    @given(
        L=st.integers(min_value=2, max_value=6),
        N=st.integers(min_value=1, max_value=4),
        n_max=st.integers(min_value=1, max_value=4),
        data=st.data(),
    )
    @settings(max_examples=60, deadline=None)
    def test_sector_closure(self, L, N, n_max, data):
        if N > L * n_max:
            return
        basis = build_basis(L, N, n_max)
        i = data.draw(st.integers(min_value=0, max_value=basis.dim - 1))
        m = data.draw(st.integers(min_value=0, max_value=L - 2))
        target, amp = hop_element(basis.state(i), m, n_max)
        if amp != 0.0:
            assert sum(target) == N
            assert max(target) <= n_max
            assert target in basis._index


class TestOperators:
    def test_hopping_matches_dense_oracle(self):
        basis = build_basis(4, 2, 2)
        dense = np.zeros((basis.dim, basis.dim))
        for i, s in enumerate(basis.states):
            for m in range(basis.L - 1):
                # a†_m a_{m+1}
                if s[m + 1] > 0 and s[m] + 1 <= basis.n_max:
                    t = list(s)
                    t[m + 1] -= 1
                    t[m] += 1
                    j = basis.index(tuple(t))
                    amp = sqrt(s[m + 1] * (s[m] + 1))
                    dense[j, i] += amp
                    dense[i, j] += amp
        op = hopping_operator(basis)
        np.testing.assert_allclose(op.toarray(), dense, atol=1e-14)
        assert op.is_hermitian()

    def test_number_diagonal(self):
        basis = build_basis(3, 2, 2)
        w = np.array([0.5, -1.0, 2.0])
        op = number_operator_diagonal(basis, w)
        for i, s in enumerate(basis.states):
            assert op.diagonal()[i] == pytest.approx(sum(wi * ni for wi, ni in zip(w, s)))
        off = op.toarray() - np.diag(op.diagonal())
        assert np.abs(off).max() == 0.0

    def test_number_diagonal_shape_check(self):
        basis = build_basis(3, 2, 2)
        with pytest.raises(ValueError):
            number_operator_diagonal(basis, np.ones(4))

    def test_interaction_diagonal(self):
        basis = build_basis(2, 3, 3)
        diag = interaction_diagonal(basis, U=-1.0)
        for i, s in enumerate(basis.states):
            assert diag[i] == pytest.approx(-0.5 * sum(n * (n - 1) for n in s))

    def test_annihilation_sector_map(self):
        upper = build_basis(3, 2, 2)
        lower = build_basis(3, 1, 2)
        a1 = annihilation_operator(upper, lower, 1)
        # a_1 |0,2,0> = sqrt(2) |0,1,0>
        v = np.zeros(upper.dim)
        v[upper.index((0, 2, 0))] = 1.0
        out = a1 @ v
        assert out[lower.index((0, 1, 0))] == pytest.approx(sqrt(2))
        assert np.count_nonzero(out) == 1
        # a†a from the map reproduces the occupation of site 1
        n1 = (a1.T @ a1).toarray()
        np.testing.assert_allclose(
            np.diag(n1), [s[1] for s in upper.states], atol=1e-14
        )

    def test_annihilation_rejects_wrong_sector(self):
        upper = build_basis(3, 2, 2)
        with pytest.raises(ValueError):
            annihilation_operator(upper, build_basis(3, 2, 2), 0)
