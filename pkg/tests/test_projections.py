import math

import numpy as np
import pytest
from hypothesis import given

from hyperop.algebra import Hypercomplex
from hyperop.errors import DependentInputError, NonOrthogonalError, PreconditionError
from hyperop.kmodule import KVector, orth_complement, random_kvector
from hyperop.operators import (QuasilinearOp, adjoint, compose, from_k_matrix, identity, random_op,
                               random_right_linear, scale_real)
from hyperop.projections import (GradedProjection, complement, difference, join, kernel_projection, meet,
                                 orthogonal_family_sum, ordering_check, power_limit_projection, projection_onto,
                                 range_projection)

from strategies import kinds, rng_from, seeds


def e(kind, n, l):
    return KVector.basis(kind, n, l)


def close(P, Q, atol=1e-10):
    return float(np.abs(P.op.rep - Q.op.rep).max()) <= atol


def invariants_ok(P, atol=1e-9):
    return max(P.invariant_residuals().values()) <= atol


class TestProjectionOnto:
    def test_full_space(self, kind):
        P = projection_onto([e(kind, 2, 0), e(kind, 2, 1)])
        assert P.op.allclose(identity(kind, 2), atol=1e-14)

    def test_coordinate(self, kind, rng):
        P = projection_onto([e(kind, 2, 0)])
        a, b = (Hypercomplex(kind, rng.standard_normal(P.tag.dim)) for _ in range(2))
        x = e(kind, 2, 0).rmul(a) + e(kind, 2, 1).rmul(b)
        np.testing.assert_allclose(P(x).data, e(kind, 2, 0).rmul(a).data, atol=1e-15)

    def test_complement_sums_to_identity(self, rng):
        Y = [random_kvector("H", 3, rng)]
        P = projection_onto(Y)
        Q = projection_onto(orth_complement(Y))
        assert np.abs(P.op.rep + Q.op.rep - np.eye(12)).max() <= 1e-11

    def test_norm_reconstruction_invariants(self, kind, rng):
        P = projection_onto([random_kvector(kind, 3, rng) for _ in range(2)])
        assert P.op.norm() == pytest.approx(1.0)
        x = random_kvector(kind, 3, rng)
        np.testing.assert_allclose(P.reconstruct(x).data, P(x).data, atol=1e-10)
        assert invariants_ok(P, 1e-10)

    def test_dependent_basis(self):
        x = e("H", 2, 0)
        with pytest.raises(DependentInputError):
            projection_onto([x, x.rmul(Hypercomplex.from_label("H", "k"))])

    def test_json(self, rng):
        d = projection_onto([random_kvector("H", 2, rng)]).to_json()
        assert set(d) == {"algebra", "n", "rep", "basis"}


class TestRangeKernel:
    def test_invertible(self, kind, rng):
        T = from_k_matrix(kind, [[2, 1], [0, 3]])
        assert close(range_projection(T), GradedProjection.identity(kind, 2))
        assert kernel_projection(T).rank == 0

    def test_projection_range(self, rng):
        P = projection_onto([random_kvector("H", 3, rng)])
        assert close(range_projection(P.op), P, 1e-10)

    def test_diagonal(self, kind):
        T = from_k_matrix(kind, [[1, 0], [0, 0]])
        assert close(range_projection(T), projection_onto([e(kind, 2, 0)]))
        assert close(kernel_projection(T), projection_onto([e(kind, 2, 1)]))

    def test_identities(self, kind, rng):
        X = random_right_linear(kind, 3, rng).rep
        d = X.shape[0] // 3
        T = QuasilinearOp(kind, 3, X @ np.diag([1.0] * (2 * d) + [0.0] * d))
        Ts = adjoint(T)
        TsT = compose(Ts, T)
        assert np.abs(kernel_projection(T).op.rep - (np.eye(T.N) - range_projection(Ts).op.rep)).max() <= 1e-9
        assert close(range_projection(TsT), range_projection(Ts), 1e-9)
        assert close(kernel_projection(TsT), kernel_projection(T), 1e-9)

    def test_requires_right_linear(self, rng):
        with pytest.raises(PreconditionError):
            range_projection(random_op("H", 2, rng))


class TestLattice:
    def test_examples(self, kind):
        E = projection_onto([e(kind, 2, 0)])
        assert close(join(E, E), E)
        assert meet(E, complement(E)).rank == 0
        F = projection_onto([(e(kind, 2, 0) + e(kind, 2, 1)) / math.sqrt(2)])
        assert close(join(E, F), GradedProjection.identity(kind, 2))
        assert meet(E, F).rank == 0

    @given(kinds, seeds)
    def test_everything_built_is_graded(self, kind, seed):
        rng = rng_from(seed)
        E = projection_onto([random_kvector(kind, 3, rng)])
        F = projection_onto([random_kvector(kind, 3, rng) for _ in range(2)])
        T = random_right_linear(kind, 3, rng)
        for P in (complement(E), join(E, F), meet(E, F), range_projection(T), kernel_projection(T)):
            assert invariants_ok(P)

    def test_difference(self, kind, rng):
        vs = [random_kvector(kind, 3, rng) for _ in range(2)]
        E, F = projection_onto(vs[:1]), projection_onto(vs)
        D = difference(F, E).op.rep
        assert np.abs(D @ D - D).max() <= 1e-10 and np.abs(D - D.T).max() <= 1e-10

    def test_chain_stabilises(self, rng):
        vs = [random_kvector("H", 3, rng) for _ in range(3)]
        chain = [projection_onto(vs[: k + 1]) for k in range(3)]
        acc = chain[0]
        for P in chain[1:]:
            acc = join(acc, P)
        assert close(acc, chain[-1], 1e-9) and close(acc, GradedProjection.identity("H", 3), 1e-9)

    def test_range_of_product(self, rng):
        E = projection_onto([random_kvector("H", 3, rng) for _ in range(2)])
        F = projection_onto([random_kvector("H", 3, rng)])
        lhs = range_projection(compose(E.op, F.op)).op.rep
        rhs = E.op.rep - meet(E, complement(F)).op.rep
        assert np.abs(lhs - rhs).max() <= 1e-9


class TestOrdering:
    def test_below_identity(self, kind, rng):
        r = ordering_check(projection_onto([random_kvector(kind, 2, rng)]), GradedProjection.identity(kind, 2))
        assert r.agree and r.holds

    def test_nested_and_incomparable(self, rng):
        for _ in range(50):
            vs = [random_kvector("H", 3, rng) for _ in range(2)]
            r = ordering_check(projection_onto(vs[:1]), projection_onto(vs))
            assert r.agree and r.holds
        E = projection_onto([e("H", 2, 0)])
        F = projection_onto([(e("H", 2, 0) + e("H", 2, 1)) / math.sqrt(2)])
        r = ordering_check(E, F)
        assert r.agree and not (r.inclusion or r.products or r.norms or r.forms)


class TestPowerLimit:
    def test_projection_fixed(self, rng):
        P = projection_onto([random_kvector("H", 2, rng)])
        res = power_limit_projection(P.op)
        assert all(d <= 1e-9 for _, d in res.steps)

    def test_half_diagonal(self):
        res = power_limit_projection(from_k_matrix("H", [[0.5, 0], [0, 0]]))
        assert res.distance <= 7e-4 and res.monotone and res.ok
        assert close(res.projection, projection_onto([e("H", 2, 0)]))
        assert res.distance <= abs(math.log(0.5)) / 1024 + 1e-9

    def test_half_identity(self):
        res = power_limit_projection(scale_real(identity("O", 2), 0.5))
        assert close(res.projection, GradedProjection.identity("O", 2))

    def test_random(self, rng):
        X = random_right_linear("H", 3, rng).rep
        A = X.T @ X
        w, U = np.linalg.eigh(A)
        w = np.clip(w / w.max(), 0, 1)
        w[w < 0.05] = 0.0
        res = power_limit_projection(QuasilinearOp("H", 3, (U * w) @ U.T))
        assert res.monotone and res.distance <= abs(math.log(res.lambda_min)) / 1024 + 1e-9

    def test_out_of_range(self):
        with pytest.raises(PreconditionError):
            power_limit_projection(scale_real(identity("H", 1), 2.0))


class TestFamilies:
    def test_coordinates(self, kind):
        ps = [projection_onto([e(kind, 3, l)]) for l in range(3)]
        assert close(orthogonal_family_sum(ps), GradedProjection.identity(kind, 3))
        two = orthogonal_family_sum(ps[:2])
        assert two.rank == 2 and close(two, join(ps[0], ps[1]))
        assert orthogonal_family_sum([], tag=kind, n=3).rank == 0

    def test_non_orthogonal(self):
        E = projection_onto([e("H", 2, 0)])
        F = projection_onto([(e("H", 2, 0) + e("H", 2, 1)) / math.sqrt(2)])
        with pytest.raises(NonOrthogonalError):
            orthogonal_family_sum([E, F])
