"""Tests for the state family constructors."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distlab.linalg import partial_trace
from distlab.states import (
    State,
    StateSet,
    bell_states,
    domino_states,
    embed_set,
    embed_state,
    extended_domino_basis,
    generalized_bell_states,
    maximally_mixed,
    mix,
    mutually_orthogonal,
    pairwise_overlaps,
    pure_state,
    reduced_state,
    schmidt_rank,
    state_set_from_json,
    state_set_to_json,
    state_vector,
)


def stacked_vectors(states):
    return np.column_stack([state_vector(s) for s in states])


def test_pure_state_basics():
    s = pure_state([1, 0, 0, 0], (2, 2))
    assert np.array_equal(s.rho, np.diag([1.0, 0, 0, 0]).astype(complex))
    # auto-normalization: unnormalized (1,1) gives the |+><+| projector
    s = pure_state([1, 1], (2,))
    assert np.max(np.abs(s.rho - np.full((2, 2), 0.5))) <= 1e-15
    phi = pure_state([1, 0, 0, 1], (2, 2))
    assert phi.rho[0, 0] == pytest.approx(0.5)
    assert phi.rho[0, 3] == pytest.approx(0.5)
    assert phi.rho[3, 3] == pytest.approx(0.5)


def test_pure_state_rejects_zero_and_mismatch():
    with pytest.raises(ValueError):
        pure_state([0, 0, 0, 0], (2, 2))
    with pytest.raises(ValueError):
        pure_state([1, 0, 0], (2, 2))


def test_state_invariants_enforced():
    with pytest.raises(ValueError):
        State(np.diag([0.5, 0.6]).astype(complex), (2,))
    with pytest.raises(ValueError):
        State(np.diag([1.5, -0.5]).astype(complex), (2,))
    with pytest.raises(ValueError):
        State(np.array([[1, 1], [0, 0]], dtype=complex), (2,))


def test_bell_states_orthonormal():
    s = bell_states()
    assert len(s) == 4
    g = pairwise_overlaps(s)
    assert np.max(np.abs(g - np.eye(4))) <= 1e-12
    # element (0,0) is |Phi+>
    expected = np.zeros((4, 4), dtype=complex)
    expected[np.ix_([0, 3], [0, 3])] = 0.5
    assert np.max(np.abs(s[0].rho - expected)) <= 1e-15


def test_generalized_bell_maximally_mixed_marginals():
    s = generalized_bell_states(3)
    assert len(s) == 9
    assert np.max(np.abs(pairwise_overlaps(s) - np.eye(9))) <= 1e-12
    for st_ in s:
        for party in (0, 1):
            marg = partial_trace(st_.rho, (3, 3), party)
            assert np.max(np.abs(marg - np.eye(3) / 3)) <= 1e-12


def test_generalized_bell_rejects_small_dimension():
    with pytest.raises(ValueError):
        generalized_bell_states(1)


def test_domino_states_form_orthonormal_product_basis():
    s = domino_states()
    assert len(s) == 9
    assert np.max(np.abs(pairwise_overlaps(s) - np.eye(9))) <= 1e-12
    for st_ in s:
        assert schmidt_rank(st_) == 1
    # |1>|1> is the single diagonal entry at multi-index (1,1)
    center = [st_ for st_ in s if st_.label == "|1>|1>"][0]
    expected = np.zeros((9, 9), dtype=complex)
    expected[4, 4] = 1.0
    assert np.array_equal(center.rho, expected)


def test_extended_domino_basis_cases():
    assert len(extended_domino_basis(3, 3)) == 9
    big = extended_domino_basis(4, 4)
    assert len(big) == 16
    assert np.max(np.abs(pairwise_overlaps(big) - np.eye(16))) <= 1e-12
    v = stacked_vectors(big)
    assert np.max(np.abs(v.conj().T @ v - np.eye(16))) <= 1e-9
    rect = extended_domino_basis(3, 4)
    assert len(rect) == 12
    for st_ in rect:
        assert schmidt_rank(st_) == 1
    with pytest.raises(ValueError):
        extended_domino_basis(2, 4)


def test_embed_state_preserves_spectrum_and_label():
    phi = pure_state([1, 0, 0, 1], (2, 2), label="phi+")
    same = embed_state(phi, (2, 2))
    assert np.array_equal(same.rho, phi.rho)
    big = embed_state(phi, (3, 3))
    assert big.label == "phi+"
    assert np.trace(big.rho).real == pytest.approx(1.0, abs=1e-12)
    w_small = np.sort(np.linalg.eigvalsh(phi.rho))
    w_big = np.sort(np.linalg.eigvalsh(big.rho))
    assert np.max(np.abs(w_big[-4:] - w_small)) <= 1e-12
    assert np.max(np.abs(w_big[:-4])) <= 1e-12


def test_embed_commutes_with_mixing_exactly():
    a = pure_state([1, 0, 0, 1], (2, 2))
    b = pure_state([0, 1, 1, 0], (2, 2))
    p = 0.3
    lhs = embed_state(mix(p, a, b), (3, 3)).rho
    rhs = p * embed_state(a, (3, 3)).rho + (1 - p) * embed_state(b, (3, 3)).rho
    assert np.array_equal(lhs, rhs)


def test_schmidt_rank():
    assert schmidt_rank(pure_state([1, 0, 0, 0], (2, 2))) == 1
    phi = pure_state([1, 0, 0, 1], (2, 2))
    assert schmidt_rank(phi) == 2
    embedded = embed_state(phi, (3, 3))
    assert schmidt_rank(embedded) == 2
    # independent check: rank of the reshaped amplitude matrix
    psi = state_vector(embedded)
    assert np.linalg.matrix_rank(psi.reshape(3, 3), tol=1e-9) == 2


def test_schmidt_rank_rejects_mixed_input():
    with pytest.raises(ValueError):
        schmidt_rank(maximally_mixed((2, 2)))


def test_schmidt_rank_cut_validation():
    ghz = pure_state([1, 0, 0, 0, 0, 0, 0, 1], (2, 2, 2))
    assert schmidt_rank(ghz, cut=(0,)) == 2
    assert schmidt_rank(ghz, cut=(0, 1)) == 2
    with pytest.raises(ValueError):
        schmidt_rank(ghz, cut=())
    with pytest.raises(ValueError):
        schmidt_rank(ghz, cut=(0, 1, 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 5))
def test_schmidt_rank_invariant_under_embedding(seed, d):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    s = pure_state(v, (2, 2))
    assert schmidt_rank(embed_state(s, (d, d))) == schmidt_rank(s)


def test_mutually_orthogonal():
    assert mutually_orthogonal(domino_states(), 1e-12)
    zero_plus = StateSet([pure_state([1, 0], (2,)), pure_state([1, 1], (2,))])
    assert not mutually_orthogonal(zero_plus, 1e-9)
    assert mutually_orthogonal(StateSet([pure_state([1, 1], (2,))]), 1e-12)


def test_reduced_state_of_bell_is_maximally_mixed():
    for party in (0, 1):
        marg = reduced_state(bell_states()[0], party)
        assert np.max(np.abs(marg - np.eye(2) / 2)) <= 1e-12


def test_state_set_json_roundtrip():
    s = domino_states()
    obj = state_set_to_json(s)
    back = state_set_from_json(obj)
    assert back.dims == (3, 3)
    assert len(back) == 9
    for a, b in zip(s, back):
        assert a.label == b.label
        assert np.array_equal(a.rho, b.rho)
    with pytest.raises(ValueError):
        state_set_from_json({"dims": [3, 3], "states": [], "extra": 1})


def test_state_set_requires_common_dims():
    with pytest.raises(ValueError):
        StateSet([pure_state([1, 0], (2,)), pure_state([1, 0, 0], (3,))])
    with pytest.raises(ValueError):
        StateSet([])


def test_embed_set():
    small = bell_states()
    big = embed_set(small, (3, 3))
    assert big.dims == (3, 3)
    assert len(big) == 4
