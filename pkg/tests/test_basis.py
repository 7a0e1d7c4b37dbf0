import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from osmps.basis import (
    BasisError,
    change_of_basis,
    expand_local,
    make_basis,
    reconstruct_local,
)

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])

ALL_BASES = [(d, kind) for d in (2, 3, 4) for kind in ("hermitian", "real")]


@pytest.mark.parametrize("d,kind", ALL_BASES)
def test_orthonormality(d, kind):
    b = make_basis(d, kind)
    elems = b.elements.astype(complex)
    gram = np.einsum("iab,jab->ij", elems.conj(), elems) / d
    assert np.abs(gram - np.eye(d * d)).max() < 1e-12


@pytest.mark.parametrize("d,kind", ALL_BASES)
def test_identity_first(d, kind):
    b = make_basis(d, kind)
    assert np.allclose(b.elements[0], np.eye(d))


def test_pauli_set_for_d2_hermitian():
    b = make_basis(2, "hermitian")
    assert np.allclose(b.elements[1], SX)
    assert np.allclose(b.elements[2], SY)
    assert np.allclose(b.elements[3], SZ)


def test_real_set_for_d2():
    b = make_basis(2, "real")
    assert not np.iscomplexobj(b.elements)
    assert np.allclose(b.elements[1], SX.real)
    assert np.allclose(b.elements[2], np.array([[0.0, -1.0], [1.0, 0.0]]))  # -i sigma_y
    assert np.allclose(b.elements[3], SZ.real)


def test_hermitian_kind_is_hermitian():
    for d in (2, 3, 4):
        b = make_basis(d, "hermitian")
        for p in b.elements:
            assert np.allclose(p, p.conj().T, atol=1e-14)


def test_d4_is_pauli_products():
    b = make_basis(4, "hermitian")
    assert len(b.elements) == 16
    paulis = [np.eye(2), SX, SY, SZ]
    k = 0
    for a in range(4):
        for c in range(4):
            assert np.allclose(b.elements[k], np.kron(paulis[a], paulis[c]))
            k += 1


def test_unsupported_dimension():
    with pytest.raises(BasisError):
        make_basis(5, "hermitian")
    with pytest.raises(BasisError):
        make_basis(2, "unitary")


class TestExpandLocal:
    def test_identity(self):
        c = expand_local(np.eye(2), make_basis(2, "hermitian"))
        assert np.allclose(c, [1, 0, 0, 0])

    def test_sigma_plus(self):
        sp = (SX + 1j * SY) / 2
        c = expand_local(sp, make_basis(2, "hermitian"))
        assert np.allclose(c, [0, 0.5, 0.5j, 0])

    def test_sz_in_real_basis(self):
        c = expand_local(SZ, make_basis(2, "real"))
        assert np.allclose(c, [0, 0, 0, 1])

    @given(st.integers(0, 2**31 - 1), st.sampled_from(ALL_BASES))
    @settings(max_examples=30, deadline=None)
    def test_roundtrip(self, seed, dkind):
        d, kind = dkind
        basis = make_basis(d, kind)
        rng = np.random.default_rng(seed)
        op = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        c = expand_local(op, basis)
        assert np.allclose(reconstruct_local(c, basis), op, atol=1e-13)

    def test_shape_mismatch(self):
        with pytest.raises(BasisError):
            expand_local(np.eye(3), make_basis(2, "hermitian"))


class TestChangeOfBasis:
    def test_identity_transform(self):
        b = make_basis(2, "hermitian")
        t = change_of_basis(b, b)
        assert np.allclose(t.matrix, np.eye(4), atol=1e-14)

    def test_real_to_hermitian_entry(self):
        t = change_of_basis(make_basis(2, "real"), make_basis(2, "hermitian"))
        # the -i*sigma_y element maps to -i times the sigma_y coefficient
        assert abs(t.matrix[2, 2] + 1j) < 1e-14
        row = t.matrix[2].copy()
        col = t.matrix[:, 2].copy()
        row[2] = col[2] = 0.0
        assert np.abs(row).max() < 1e-14 and np.abs(col).max() < 1e-14

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_unitary(self, d):
        t = change_of_basis(make_basis(d, "real"), make_basis(d, "hermitian"))
        assert np.allclose(t.matrix.conj().T @ t.matrix, np.eye(d * d), atol=1e-12)

    def test_roundtrip_is_identity(self):
        r, h = make_basis(2, "real"), make_basis(2, "hermitian")
        ab = change_of_basis(r, h).matrix
        ba = change_of_basis(h, r).matrix
        assert np.allclose(ba @ ab, np.eye(4), atol=1e-12)

    def test_coefficients_transform_correctly(self):
        # direct-expansion oracle on a random hermitian operator
        rng = np.random.default_rng(123)
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        op = m + m.conj().T
        r, h = make_basis(2, "real"), make_basis(2, "hermitian")
        c_direct = expand_local(op, h)
        c_mapped = change_of_basis(r, h).matrix @ expand_local(op, r)
        assert np.allclose(c_direct, c_mapped, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(BasisError):
            change_of_basis(make_basis(2, "real"), make_basis(3, "hermitian"))
