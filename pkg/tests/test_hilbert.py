import math

import numpy as np
import pytest

from cavityconv.hilbert import (
    DIM_CAP,
    HilbertSpace,
    SpaceMismatchError,
    annihilation,
    atomic_sigma,
    basis_state,
    creation,
    embed_atom,
    expectation,
    field_space,
    fock_state,
    make_space,
    number_operator,
    project_atom,
    vacuum_state,
)
from cavityconv.serialize import (
    state_from_bytes,
    state_from_text,
    state_to_bytes,
    state_to_text,
)


def random_state(space, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=space.total_dim) + 1j * rng.normal(size=space.total_dim)
    amps /= np.linalg.norm(amps)
    from cavityconv.hilbert import StateVector

    return StateVector(space, amps)


def test_make_space_dimensions():
    assert make_space(3, 0, 0).total_dim == 3
    assert make_space(3, 5, 5).total_dim == 108
    assert make_space(4, 10, 10).total_dim == 484


def test_make_space_rejects_bad_levels():
    for bad in (0, 1, 2, 5):
        with pytest.raises(ValueError):
            make_space(bad, 3, 3)


def test_make_space_rejects_oversized():
    with pytest.raises(ValueError):
        make_space(3, 999, 999)
    assert 3 * 1000 * 1000 > DIM_CAP


def test_index_maps_bijective():
    space = make_space(4, 3, 5)
    seen = set()
    for k in range(space.total_dim):
        level, n_a, n_b = space.unflatten(k)
        assert space.flatten(level, n_a, n_b) == k
        seen.add((level, n_a, n_b))
    assert len(seen) == space.total_dim


def test_fock_numbers_match_unflatten():
    space = make_space(3, 2, 4)
    n_a, n_b = space.fock_numbers()
    for k in range(space.total_dim):
        _, na, nb = space.unflatten(k)
        assert n_a[k] == na and n_b[k] == nb


def test_annihilation_ladder_elements():
    space = field_space(5, 5)
    a = annihilation(space, "a")
    # a|1,0> = |0,0>
    out = a.apply(fock_state(space, 1, 0))
    assert abs(out.inner(fock_state(space, 0, 0)) - 1.0) < 1e-14
    # a|0,0> = 0
    assert a.apply(vacuum_state(space)).norm() == 0.0
    # <2| a |3> = sqrt(3)
    amp = fock_state(space, 2, 0).inner(a.apply(fock_state(space, 3, 0)))
    assert abs(amp - math.sqrt(3)) < 1e-14


def test_creation_is_adjoint_of_annihilation():
    space = make_space(3, 4, 3)
    for mode in ("a", "b"):
        a = annihilation(space, mode)
        diff = (creation(space, mode).matrix - a.matrix.conj().T)
        assert abs(diff).max() == 0.0


def test_commutator_below_truncation():
    # [a, a^dag] = 1 on every row with n < n_max; only the top row deviates
    space = field_space(6, 4)
    for mode, n_max in (("a", 6), ("b", 4)):
        a = annihilation(space, mode)
        comm = (a @ a.dag() - a.dag() @ a).to_dense()
        n_a, n_b = space.fock_numbers()
        n = n_a if mode == "a" else n_b
        eye = np.eye(space.total_dim)
        rows = n < n_max
        assert np.allclose(comm[rows], eye[rows], atol=1e-14)
        top = n == n_max
        assert not np.allclose(comm[top], eye[top])


def test_atomic_sigma_completeness_and_algebra():
    for levels in (3, 4):
        space = make_space(levels, 2, 2)
        total = None
        for label in space.level_labels:
            proj = atomic_sigma(space, label, label)
            total = proj if total is None else total + proj
        assert np.allclose(total.to_dense(), np.eye(space.total_dim))
        # sigma_kl sigma_mn = delta_lm sigma_kn, exactly
        for k in space.level_labels:
            for l in space.level_labels:
                for m in space.level_labels:
                    for n in space.level_labels:
                        prod = (atomic_sigma(space, k, l) @ atomic_sigma(space, m, n)).to_dense()
                        expected = atomic_sigma(space, k, n).to_dense() if l == m else 0.0
                        assert np.array_equal(prod, expected if l == m else np.zeros_like(prod))


def test_atomic_sigma_annihilates_empty_level():
    space = make_space(3, 1, 1)
    state = basis_state(space, "g", 0, 0)
    assert atomic_sigma(space, "g", "e").apply(state).norm() == 0.0


def test_atomic_sigma_rejects_bad_level():
    space = make_space(3, 1, 1)
    with pytest.raises(ValueError):
        atomic_sigma(space, "f", "g")
    with pytest.raises(ValueError):
        atomic_sigma(space, "q", "g")


def test_project_atom_examples():
    space = make_space(3, 1, 1)
    psi = basis_state(space, "i", 0, 0)
    on_i = project_atom(psi, "i")
    assert abs(on_i.norm() - 1.0) < 1e-14
    assert abs(on_i.inner(fock_state(on_i.space, 0, 0)) - 1.0) < 1e-14
    assert project_atom(psi, "g").norm() == 0.0

    mixed = (basis_state(space, "i", 1, 0).amplitudes
             + basis_state(space, "g", 0, 1).amplitudes) / math.sqrt(2)
    from cavityconv.hilbert import StateVector

    mixed = StateVector(space, mixed)
    part = project_atom(mixed, "i")
    assert abs(part.norm() ** 2 - 0.5) < 1e-14
    assert abs(part.inner(fock_state(part.space, 1, 0)) - 1 / math.sqrt(2)) < 1e-14


def test_project_atom_populations_sum_to_one():
    for seed in range(5):
        space = make_space(4, 3, 2)
        psi = random_state(space, seed)
        total = sum(project_atom(psi, lbl).norm() ** 2 for lbl in space.level_labels)
        assert abs(total - 1.0) < 1e-12


def test_embed_project_roundtrip():
    space = make_space(3, 2, 2)
    phi = random_state(field_space(2, 2), 7)
    psi = embed_atom(phi, space, "e")
    back = project_atom(psi, "e")
    assert np.allclose(back.amplitudes, phi.amplitudes)
    assert project_atom(psi, "g").norm() == 0.0


def test_expectation_number_and_identity():
    space = field_space(5, 5)
    n_op = number_operator(space, "a")
    assert expectation(n_op, vacuum_state(space)) == 0.0
    for n in range(1, 6):
        val = expectation(n_op, fock_state(space, n, 0))
        assert abs(val - n) < 1e-12
    from cavityconv.hilbert import identity_operator

    psi = random_state(space, 3)
    assert abs(expectation(identity_operator(space), psi) - 1.0) < 1e-12


def test_expectation_hermitian_is_real():
    space = field_space(4, 4)
    a = annihilation(space, "a")
    herm = a + a.dag()
    psi = random_state(space, 11)
    val = expectation(herm, psi)
    assert abs(val.imag) < 1e-12


def test_space_mismatch_rejected():
    s1 = field_space(3, 3)
    s2 = field_space(4, 3)
    with pytest.raises(SpaceMismatchError):
        annihilation(s1, "a") + annihilation(s2, "a")
    with pytest.raises(SpaceMismatchError):
        annihilation(s1, "a").apply(vacuum_state(s2))
    with pytest.raises(SpaceMismatchError):
        expectation(annihilation(s1, "a"), vacuum_state(s2))


def test_operator_and_state_immutable():
    space = field_space(2, 2)
    op = annihilation(space, "a")
    with pytest.raises(AttributeError):
        op.space = space
    psi = vacuum_state(space)
    with pytest.raises(AttributeError):
        psi.amplitudes = None
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 2.0


def test_state_serialization_roundtrip():
    space = make_space(3, 3, 2)
    psi = random_state(space, 42)
    back = state_from_bytes(state_to_bytes(psi))
    assert back.space == space
    assert np.array_equal(back.amplitudes, psi.amplitudes)
    back_text = state_from_text(state_to_text(psi))
    assert back_text.space == space
    assert np.array_equal(back_text.amplitudes, psi.amplitudes)


def test_state_binary_layout_is_interleaved_little_endian():
    space = field_space(1, 0)
    from cavityconv.hilbert import StateVector

    psi = StateVector(space, [0.5 + 0.25j, -0.75 - 1.0j])
    blob = state_to_bytes(psi)
    payload = np.frombuffer(blob[-32:], dtype="<f8")
    assert payload.tolist() == [0.5, 0.25, -0.75, -1.0]
