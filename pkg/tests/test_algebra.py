import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperop.algebra import (Hypercomplex, associator, component_extract, component_extract_batch, conj,
                             get_algebra, inverse, is_automorphism, left_mult_matrix, mul, norm, polar_exp,
                             polar_log, power, random_hypercomplex, right_mult_matrix)
from hyperop.errors import DomainError, InputError, TagMismatchError

from strategies import kinds, scalars


def g(kind, label):
    return Hypercomplex.from_label(kind, label)


def _cd_reference(a, b):
    """Cayley-Dickson doubling, written independently of the package tables."""
    n = len(a)
    if n == 1:
        return a * b
    h = n // 2
    p, q, r, s = a[:h], a[h:], b[:h], b[h:]

    def cj(x):
        y = -x.copy()
        y[0] = x[0]
        return y

    return np.concatenate([_cd_reference(p, r) - _cd_reference(cj(s), q),
                           _cd_reference(s, p) + _cd_reference(q, cj(r))])


class TestTables:
    def test_quaternion_units(self):
        i, j, k = g("H", "i"), g("H", "j"), g("H", "k")
        assert (i * j).isclose(k)
        assert (j * i).isclose(-k)
        for u in (i, j, k):
            assert (u * u).isclose(-1.0)

    def test_octonion_nonassociative_witness(self):
        i, j, l, kl = g("O", "i"), g("O", "j"), g("O", "l"), g("O", "kl")
        assert ((i * j) * l).isclose(kl)
        assert (i * (j * l)).isclose(-kl)
        assert associator(i, j, l).norm() == 2.0

    @pytest.mark.parametrize("kind", ["H", "O"])
    def test_tables_match_doubling(self, kind, rng):
        for _ in range(20):
            a, b = rng.standard_normal((2, get_algebra(kind).dim))
            got = mul(Hypercomplex(kind, a), Hypercomplex(kind, b)).coeffs
            np.testing.assert_allclose(got, _cd_reference(a, b), atol=1e-12)

    @pytest.mark.parametrize("kind", ["H", "O"])
    def test_unit_element(self, kind, rng):
        one = Hypercomplex.real(kind)
        for _ in range(50):
            z = random_hypercomplex(kind, rng)
            assert (one * z).isclose(z) and (z * one).isclose(z)


class TestNormConjInverse:
    def test_examples(self):
        i = g("H", "i")
        assert conj(i).isclose(-i)
        assert norm(Hypercomplex("H", [1, 1, 1, 1])) == 2.0
        assert inverse(2 * i).isclose(-0.5 * i)

    def test_zero_has_no_inverse(self):
        with pytest.raises(DomainError):
            inverse(Hypercomplex.real("O", 0.0))

    def test_mixed_algebras_rejected(self):
        with pytest.raises(TagMismatchError):
            g("H", "i") * g("O", "i")

    def test_wrong_length(self):
        with pytest.raises(InputError):
            Hypercomplex("H", [1.0, 2.0])

    @given(kinds.flatmap(lambda k: st.tuples(scalars(k), scalars(k))))
    def test_norm_multiplicative(self, ab):
        a, b = ab
        assert math.isclose((a * b).norm(), a.norm() * b.norm(), rel_tol=1e-12, abs_tol=1e-12)

    @given(kinds.flatmap(lambda k: st.tuples(scalars(k), scalars(k))))
    def test_alternative_laws(self, ab):
        a, b = ab
        s = max(1.0, a.norm() ** 2 * b.norm())
        assert ((a * a) * b - a * (a * b)).norm() <= 1e-12 * s
        assert ((b * a) * a - b * (a * a)).norm() <= 1e-12 * s

    @given(kinds.flatmap(lambda k: st.tuples(scalars(k), scalars(k))))
    def test_conj_reverses_products(self, ab):
        a, b = ab
        assert conj(a * b).isclose(conj(b) * conj(a), atol=1e-11)

    @given(kinds.flatmap(scalars))
    def test_inverse(self, z):
        if z.norm() < 1e-3:
            return
        assert (z * inverse(z)).isclose(1.0, atol=1e-10)


class TestPolar:
    def test_examples(self):
        i = g("H", "i")
        assert polar_exp(1.0, i, math.pi / 2).isclose(i, atol=1e-15)
        pf = polar_log(Hypercomplex.real("H", -1.0))
        assert pf.r == 1.0 and math.isclose(pf.t, math.pi) and pf.axis_defaulted

    def test_axis_must_be_unit_imaginary(self):
        with pytest.raises(DomainError):
            polar_exp(1.0, Hypercomplex("H", [1, 1, 0, 0]), 0.3)

    @pytest.mark.parametrize("kind", ["H", "O"])
    def test_round_trip(self, kind, rng):
        for _ in range(100):
            z = random_hypercomplex(kind, rng)
            p = polar_log(z)
            assert polar_exp(p.r, p.axis, p.t).isclose(z, atol=1e-12)


class TestPower:
    def test_examples(self, rng):
        assert power(g("H", "i"), 2).isclose(-1.0)
        assert power(random_hypercomplex("O", rng), 0).isclose(1.0)

    @pytest.mark.parametrize("kind", ["H", "O"])
    def test_every_bracketing_agrees(self, kind, rng):
        z = random_hypercomplex(kind, rng)

        def all_products(k):
            if k == 1:
                return [z]
            out = []
            for s in range(1, k):
                for a in all_products(s):
                    for b in all_products(k - s):
                        out.append(a * b)
            return out

        for n in range(1, 6):
            ref = power(z, n)
            for p in all_products(n):
                assert p.isclose(ref, atol=1e-12 * max(1.0, ref.norm()))

    def test_negative_exponent_rejected(self):
        with pytest.raises(DomainError):
            power(g("H", "i"), -1)


class TestComponents:
    @pytest.mark.parametrize("kind", ["H", "O"])
    def test_generators(self, kind):
        d = get_algebra(kind).dim
        for p in range(d):
            np.testing.assert_allclose(component_extract(Hypercomplex.generator(kind, p)), np.eye(d)[p],
                                       atol=1e-15)

    @pytest.mark.parametrize("kind", ["H", "O"])
    def test_random(self, kind, rng):
        z = rng.standard_normal((100, get_algebra(kind).dim))
        np.testing.assert_allclose(component_extract_batch(kind, z), z, atol=1e-13)


class TestMultMatrices:
    @pytest.mark.parametrize("kind", ["H", "O"])
    def test_unit(self, kind):
        one = Hypercomplex.real(kind)
        d = get_algebra(kind).dim
        assert np.array_equal(left_mult_matrix(one), np.eye(d))
        assert np.array_equal(right_mult_matrix(one), np.eye(d))

    def test_left_i_columns(self):
        i = g("H", "i")
        L = left_mult_matrix(i)
        for p in range(4):
            np.testing.assert_array_equal(L[:, p], (i * Hypercomplex.generator("H", p)).coeffs)

    @pytest.mark.parametrize("kind", ["H", "O"])
    def test_determinant(self, kind, rng):
        for _ in range(10):
            a = random_hypercomplex(kind, rng)
            d = get_algebra(kind).dim
            assert math.isclose(np.linalg.det(left_mult_matrix(a)), a.norm() ** d, rel_tol=1e-10)
            assert math.isclose(np.linalg.det(right_mult_matrix(a)), a.norm() ** d, rel_tol=1e-10)

    @pytest.mark.parametrize("kind", ["H", "O"])
    def test_matrices_act(self, kind, rng):
        a, b = random_hypercomplex(kind, rng), random_hypercomplex(kind, rng)
        np.testing.assert_allclose(left_mult_matrix(a) @ b.coeffs, (a * b).coeffs, atol=1e-13)
        np.testing.assert_allclose(right_mult_matrix(b) @ a.coeffs, (a * b).coeffs, atol=1e-13)

    def test_inner_automorphism_of_h(self, rng):
        u = random_hypercomplex("H", rng)
        u = u / u.norm()
        Q = left_mult_matrix(u) @ right_mult_matrix(u.conj())
        assert is_automorphism(Q, "H")
        assert not is_automorphism(np.diag([1.0, -1.0, 1.0, 1.0]), "H")


def test_json_round_trip(rng):
    z = random_hypercomplex("O", rng)
    assert Hypercomplex.from_json(z.to_json()) == z


def test_centre_is_real(rng):
    c = Hypercomplex.real("O", 3.5)
    for z in random_hypercomplex("O", rng, size=10):
        assert (c * z).isclose(z * c, atol=0.0)
