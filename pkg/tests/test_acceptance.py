"""The fifteen acceptance criteria, one test each, with their runtime budgets.

Each test appends a line to ``RESULTS``; ``conftest.py`` prints them at the end
of the session.  Running this file as a script prints them directly.
"""

import functools
import json
import math
import subprocess
import sys
import time
import warnings

import numpy as np

from hyperop.algebra import Hypercomplex, component_extract_batch, get_algebra, mul
from hyperop.calculus import (ApproximateUnit, Contour, PolySpec, cayley, exp_group, generator_estimate,
                              holomorphic_calculus, is_positive, poly_eval, pos_neg_split, positive_combination,
                              recombine, sqrt_positive)
from hyperop.kmodule import KVector, gram_schmidt_k, random_kvector
from hyperop.operators import (QuasilinearOp, adjoint, compose, from_k_matrix, is_unitary, random_op,
                               random_right_linear, random_selfadjoint, random_slice_selfadjoint, scalar_block,
                               scale_real)
from hyperop.projections import (complement, join, meet, ordering_check, power_limit_projection,
                                 projection_onto, range_projection)
from hyperop.spectral import (neumann_resolvent, resolvent, spectral_decomposition, spectral_integral,
                              spectral_radius)
from hyperop.states import (density_state, exp_right, gns_build, gns_equivalence, interpolation_bound,
                            interpolation_operator, jordan_decompose, pos_part, right_linear_basis,
                            state_validate, unitary_interpolate, vector_state, weight_functional, weight_norm)
from hyperop.verify import make_rng

RESULTS = []


def criterion(num, title, budget):
    """Time the wrapped test, enforce ``budget`` seconds and record one summary line."""
    def deco(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            err = None
            try:
                fn(*args, **kwargs)
            except AssertionError as exc:
                err = exc
            dt = time.perf_counter() - t0
            if err is None and dt >= budget:
                err = AssertionError(f"runtime {dt:.2f}s over budget {budget}s")
            status = "PASS" if err is None else "FAIL"
            note = "" if err is None else f"  ({str(err).splitlines()[0] if str(err) else 'assertion'})"
            RESULTS.append(f"criterion {num:2d} {status}  {title}  [{dt:.2f}s < {budget}s]{note}")
            if err is not None:
                raise err
        return run
    return deco


def lab(kind, s):
    return Hypercomplex.from_label(kind, s)


def real(kind, v):
    return Hypercomplex.real(kind, v)


def dist(A, B):
    return float(np.abs(A.rep - B.rep).max())


def sym(T):
    return QuasilinearOp(T.tag, T.n, (T.rep + T.rep.T) / 2)


def gram(kind, n, rng):
    X = random_right_linear(kind, n, rng)
    return sym(compose(adjoint(X), X))


def set_distance(a, b):
    a, b = np.asarray(a), np.asarray(b)
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@criterion(1, "algebra laws", 2.0)
def test_c01_algebra_laws():
    rng = make_rng(2024, "c01")
    for kind in ("H", "O"):
        d = get_algebra(kind).dim
        worst_norm = worst_alt = 0.0
        for _ in range(1000):
            a, b = (Hypercomplex(kind, rng.standard_normal(d)) for _ in range(2))
            worst_norm = max(worst_norm, abs((a * b).norm() - a.norm() * b.norm()))
            aa = a * a
            worst_alt = max(worst_alt, (aa * b - a * (a * b)).norm(), ((b * a) * a - b * aa).norm())
        assert worst_norm <= 1e-13, (kind, worst_norm)
        assert worst_alt <= 1e-13, (kind, worst_alt)
    i, j, l, kl = (lab("O", s) for s in ("i", "j", "l", "kl"))
    assert np.array_equal(mul(mul(i, j), l).coeffs, kl.coeffs)
    assert np.array_equal(mul(i, mul(j, l)).coeffs, (-kl).coeffs)


@criterion(2, "component extraction", 1.0)
def test_c02_component_extraction():
    rng = make_rng(2024, "c02")
    for kind in ("H", "O"):
        z = rng.standard_normal((1000, get_algebra(kind).dim))
        assert np.abs(component_extract_batch(kind, z) - z).max() <= 1e-13


@criterion(3, "C* identity", 5.0)
def test_c03_cstar_identity():
    rng = make_rng(2024, "c03")
    for kind in ("H", "O"):
        for _ in range(100):
            T = random_op(kind, int(rng.integers(1, 5)), rng)
            nT = T.norm()
            assert abs(compose(adjoint(T), T).norm() - nT ** 2) <= 1e-10 * nT ** 2
            assert abs(adjoint(T).norm() - nT) <= 1e-10 * nT


@criterion(4, "resolvent identity and Neumann series", 5.0)
def test_c04_resolvent():
    rng = make_rng(2024, "c04")
    for trial in range(50):
        kind = ("H", "O")[trial % 2]
        d = get_algebra(kind).dim
        T = random_right_linear(kind, 3, rng)
        c1, c2 = rng.standard_normal((2, d))
        c1[0], c2[0] = 1.5 + T.norm(), -1.5 - T.norm()
        z1, z2 = Hypercomplex(kind, c1), Hypercomplex(kind, c2)
        R1, R2 = resolvent(T, z1), resolvent(T, z2)
        rhs = R1.rep @ scalar_block(T.tag, T.n, z1 - z2) @ R2.rep
        assert np.abs(R2.rep - R1.rep - rhs).max() <= 1e-9

        R0 = resolvent(T, z1)
        dz = rng.standard_normal(d)
        dz *= 0.4 / (R0.norm() * np.linalg.norm(dz))
        z = Hypercomplex(kind, z1.coeffs + dz)
        nr = neumann_resolvent(T, z1, z, terms=60)
        assert np.abs(nr.op.rep - resolvent(T, z).rep).max() <= 1e-8


@criterion(5, "spectral decomposition", 10.0)
def test_c05_spectral_decomposition():
    rng = make_rng(2024, "c05")
    f = lambda t: math.cos(t) - 2 * t
    for trial in range(50):
        kind = ("H", "O")[trial % 2]
        n = int(rng.integers(1, 5))
        T = random_selfadjoint(kind, n, rng)
        dec = spectral_decomposition(T)
        r = dec.residuals(T)
        assert r["reconstruction"] <= 1e-9 and r["partition"] <= 1e-10 and r["orthogonal"] <= 1e-10
        fT = spectral_integral(dec, f)
        x = random_kvector(kind, n, rng)
        # norm identity, adjoint identity, resolvent as an integral
        lhs = fT.apply(x).norm() ** 2
        assert abs(lhs - sum(f(lam) ** 2 * P(x).norm() ** 2 for lam, P in dec.pairs)) <= 1e-9 * max(1.0, lhs)
        assert dist(adjoint(fT), fT) <= 1e-10 * max(1.0, fT.norm())
        q = 2 + T.norm()
        assert dist(resolvent(T, real(kind, q)), spectral_integral(dec, lambda t: 1 / (q - t))) <= 1e-8
    # K-valued integrand on operators that commute with L_M
    M = lab("H", "i")
    g = lambda t: Hypercomplex("H", [math.cos(t), math.sin(t), 0, 0])
    for _ in range(10):
        dec = spectral_decomposition(random_slice_selfadjoint("H", 3, rng, M))
        gT = spectral_integral(dec, g)
        assert dist(adjoint(gT), spectral_integral(dec, lambda t: g(t).conj())) <= 1e-10


@criterion(6, "spectral radius", 5.0)
def test_c06_spectral_radius():
    rng = make_rng(2024, "c06")
    for trial in range(20):
        kind = ("H", "O")[trial % 2]
        T = random_selfadjoint(kind, 3, rng)
        top = float(np.max(np.abs(np.linalg.eigvalsh(T.rep))))
        assert abs(spectral_radius(T).value - top) <= 1e-2
    # a normal operator that is not selfadjoint: left multiplication by a scalar of norm 2
    z = Hypercomplex("H", [1.0, 1.0, 1.0, 1.0])
    T = QuasilinearOp("H", 2, scalar_block("H", 2, z))
    assert T.normal and abs(spectral_radius(T).value - 2.0) <= 1e-2
    N = from_k_matrix("H", [[0, 1], [0, 0]])
    assert spectral_radius(N, max_doublings=12).value <= 1e-3
    Z = QuasilinearOp.zeros("O", 2)
    assert spectral_radius(Z).value <= 1e-10 and Z.norm() <= 1e-8


@criterion(7, "functional calculus laws", 20.0)
def test_c07_functional_calculus():
    rng = make_rng(2024, "c07")
    for trial in range(50):
        kind = ("H", "O")[trial % 2]
        T = random_selfadjoint(kind, 3, rng)
        f = PolySpec.from_coeffs(kind, rng.standard_normal(3).tolist())
        g = PolySpec.from_coeffs(kind, rng.standard_normal(3).tolist())
        fT, gT = poly_eval(T, f), poly_eval(T, g)
        assert dist(poly_eval(T, f.multiply(g)), compose(fT, gT)) <= 1e-8 * max(1.0, fT.norm() * gT.norm())
        gf = poly_eval(T, g.compose(f))
        assert dist(gf, poly_eval(fT, g)) <= 1e-8 * max(1.0, gf.norm())
        lam = np.linalg.eigvalsh(T.rep)
        mapped = [f.real_call(float(t)) for t in lam]
        assert set_distance(np.linalg.eigvalsh(fT.rep), mapped) <= 1e-8 * max(1.0, fT.norm())
    M = lab("H", "i")
    square = PolySpec.from_coeffs("H", [0, 0, 1])
    for _ in range(3):
        T = random_slice_selfadjoint("H", 3, rng, M)
        T = scale_real(T, 0.9 / T.norm())
        r = holomorphic_calculus(T, lambda z: z * z, Contour(real("H", 0.0), 1.0, M, nodes=256))
        assert r.validated and dist(r.op, poly_eval(T, square)) <= 1e-6


@criterion(8, "positivity suite", 10.0)
def test_c08_positivity():
    rng = make_rng(2024, "c08")
    for trial in range(20):
        kind = ("H", "O")[trial % 2]
        A = gram(kind, 3, rng)
        H = sqrt_positive(A)
        assert is_positive(H) and dist(compose(H, H), A) <= 1e-9 * max(1.0, A.norm())
        # independent root: eigen-decomposition of the real form
        w, U = np.linalg.eigh(A.rep)
        G = (U * np.sqrt(np.clip(w, 0, None))) @ U.T
        assert np.abs(G - H.rep).max() <= 1e-9 * max(1.0, H.norm())

        S = random_selfadjoint(kind, 3, rng)
        P, N = pos_neg_split(S)
        assert dist(P - N, S) <= 1e-9 and is_positive(P) and is_positive(N)
        assert np.abs(P.rep @ N.rep).max() <= 1e-9 and np.abs(N.rep @ P.rep).max() <= 1e-9
        assert abs(S.norm() - max(P.norm(), N.norm())) <= 1e-9 * S.norm()

        B = sym(A + gram(kind, 3, rng))
        D = sqrt_positive(B).rep - H.rep
        assert np.linalg.eigvalsh((D + D.T) / 2)[0] >= -1e-9

        C = sym(scale_real(A, rng.random()) + scale_real(B, rng.random()))
        assert is_positive(C)
        assert not (is_positive(S) and is_positive(scale_real(S, -1.0)))

        X = random_right_linear(kind, 3, rng)
        assert np.linalg.eigvalsh(compose(adjoint(X), X).rep)[0] >= -1e-10 * X.norm() ** 2

        terms = positive_combination(random_right_linear(kind, 3, rng))
        assert len(terms) <= 2 * get_algebra(kind).dim
        assert all(is_positive(T) for _, T in terms)
    Z = QuasilinearOp.zeros("H", 2)
    assert is_positive(Z) and is_positive(scale_real(Z, -1.0)) and Z.norm() <= 1e-9
    assert compose(adjoint(Z), Z).norm() == 0.0
    for kind in ("H", "O"):
        A = random_right_linear(kind, 3, rng)
        assert dist(recombine(positive_combination(A)), A) <= 1e-9


@criterion(9, "Cayley transform and exponential group", 5.0)
def test_c09_cayley_exp():
    rng = make_rng(2024, "c09")
    for kind in ("H", "O"):
        Z = QuasilinearOp.zeros(kind, 3)
        assert np.array_equal(cayley(Z, lab(kind, "i")).rep + 0.0, -np.eye(Z.N))
    for s in ("i", "j", "k"):
        M = lab("H", s)
        for _ in range(5):
            T = random_slice_selfadjoint("H", 3, rng, M)
            U = cayley(T, M)
            assert np.abs(U.rep @ U.rep.T - np.eye(U.N)).max() <= 1e-10
            a, b = rng.standard_normal(2)
            assert dist(exp_group(T, M, a + b), compose(exp_group(T, M, a), exp_group(T, M, b))) <= 1e-9
    M = lab("H", "i")
    B = random_slice_selfadjoint("H", 2, rng, M)
    A = QuasilinearOp("H", 2, scalar_block("H", 2, M) @ B.rep)
    errs = [dist(generator_estimate(lambda t: exp_group(B, M, t), eps), A) for eps in (1e-3, 5e-4, 2.5e-4)]
    # halving eps halves the error
    assert all(1.8 <= errs[k] / errs[k + 1] <= 2.2 for k in range(2))


@criterion(10, "projection lattice", 10.0)
def test_c10_projections():
    rng = make_rng(2024, "c10")
    for trial in range(50):
        kind = ("H", "O")[trial % 2] if trial < 10 else "H"
        n = 3
        vs = [random_kvector(kind, n, rng) for _ in range(n)]
        k = int(rng.integers(1, n))
        E = projection_onto(vs[:k])
        F = projection_onto(vs[: k + 1]) if trial % 3 else projection_onto([random_kvector(kind, n, rng)])
        r = ordering_check(E, F)
        assert r.agree, r.residuals
        if trial % 3:
            assert r.holds
        for P in (E, F, complement(E), join(E, F), meet(E, F)):
            assert max(P.invariant_residuals().values()) <= 1e-9
        if kind == "H":
            assert dist(range_projection(E.op + F.op).op, join(E, F).op) <= 1e-9
            lhs = range_projection(compose(E.op, F.op)).op.rep
            assert np.abs(lhs - (E.op.rep - meet(E, complement(F)).op.rep)).max() <= 1e-9
    for _ in range(5):
        X = random_right_linear("H", 3, rng).rep
        w, U = np.linalg.eigh(X.T @ X)
        w = w / w.max()
        w = np.where(w < 0.05, 0.0, np.maximum(w, 1e-3))
        res = power_limit_projection(QuasilinearOp("H", 3, (U * w) @ U.T))
        assert res.lambda_min >= 1e-3
        assert res.monotone and res.distance <= abs(math.log(res.lambda_min)) / 1024 + 1e-9


@criterion(11, "approximate unit", 10.0)
def test_c11_approximate_unit():
    rng = make_rng(2024, "c11")
    for trial in range(20):
        X = random_right_linear("H", 3, rng).rep
        keep = [1.0] * 8 + [float(trial % 2)] * 4  # every other S has a singular H
        S = QuasilinearOp("H", 3, X @ np.diag(keep))
        au = ApproximateUnit.build(S)
        for m, n in ((2 ** 9, 2 ** 10), (2 ** 10, 2 ** 11)):
            measured, predicted = au.gap(m, n)
            assert abs(measured - predicted) <= 1e-8


@criterion(12, "GNS representation", 10.0)
def test_c12_gns():
    rng = make_rng(2024, "c12")
    gens = list(right_linear_basis("H", 2))
    for x in (KVector.basis("H", 2, 0), random_kvector("H", 2, rng, unit=True)):
        res = gns_build(gens, vector_state(x), rng=rng)
        r = res.residuals
        assert r["reproduction"] <= 1e-10 and r["multiplicative"] <= 1e-10 and r["adjoint"] <= 1e-10
        assert r["contraction_excess"] <= 1e-9
        for _ in range(10):
            A = random_right_linear("H", 2, rng).rep
            assert np.linalg.norm(res.pi(A), 2) <= np.linalg.norm(A, 2) + 1e-9
        eq = gns_equivalence(res, x=x)
        assert max(eq.isometry, eq.intertwining, eq.cyclic_residual) <= 1e-8


@criterion(13, "states", 10.0)
def test_c13_states():
    rng = make_rng(2024, "c13")
    for trial in range(20):
        kind = ("H", "O")[trial % 2]
        w = rng.random(2)
        rho = density_state([random_kvector(kind, 2, rng, unit=True) for _ in range(2)], (w / w.sum()).tolist())
        A, B = random_right_linear(kind, 2, rng).rep, random_right_linear(kind, 2, rng).rep
        rhs = rho(A.T @ A).re * rho(B.T @ B).re
        assert rho(B.T @ A).norm() ** 2 <= rhs + 1e-10 * max(1.0, rhs)
        assert (rho(A.T) - rho(A).conj()).norm() <= 1e-10 * max(1.0, np.linalg.norm(A, 2))
    for _ in range(3):
        x = random_kvector("H", 2, rng, unit=True)
        rep = state_validate(vector_state(x), rng=rng)
        assert abs(rep.norm_estimate - 1.0) <= 2e-2 and rep.agree
        assert abs(rep.analytic_norm - 1.0) <= 1e-12
        rho = vector_state(x) - vector_state(random_kvector("H", 2, rng, unit=True)).scaled(0.5)
        cand = rho.extremal_candidate()
        assert abs(rho(cand).norm() - rho.analytic_norm()) <= 1e-10 * rho.analytic_norm()
        plus, minus = jordan_decompose(rho)
        for _ in range(5):
            S = random_selfadjoint("H", 2, rng)
            assert (plus(S) - minus(S) - rho(S)).norm() <= 1e-10
        assert abs(plus.value_at_one() + minus.value_at_one() - rho.analytic_norm()) <= 1e-10
    for _ in range(10):
        p = weight_functional("O", range(5), rng.integers(-8, 9, size=5) / 4.0)
        pp, pm = pos_part(p)
        assert weight_norm(p) == pp.value_at_one() + pm.value_at_one()


@criterion(14, "interpolation", 5.0)
def test_c14_interpolation():
    rng = make_rng(2024, "c14")
    for kind in ("H", "O"):
        n, r = 3, 2.0
        xs = gram_schmidt_k([random_kvector(kind, n, rng) for _ in range(n)])
        zs = []
        for _ in range(n):
            z = random_kvector(kind, n, rng)
            zs.append(z * (r * rng.random() / z.norm()))
        F = interpolation_operator(xs, zs)
        for x, z in zip(xs, zs):
            assert np.abs(F.apply(x).data - z.data).max() <= 1e-12
        assert F.norm() <= interpolation_bound(n, r)
    M = lab("H", "j")
    for _ in range(5):
        xs = gram_schmidt_k([random_kvector("H", 3, rng) for _ in range(2)])
        cols = gram_schmidt_k([random_kvector("H", 3, rng) for _ in range(3)])
        V = from_k_matrix("H", np.stack([c.data for c in cols], axis=1))
        ys = [V.apply(x) for x in xs]
        U, S = unitary_interpolate(xs, ys, M)
        assert is_unitary(U, atol=1e-9)
        assert max(np.abs(U.apply(x).data - y.data).max() for x, y in zip(xs, ys)) <= 1e-9
        assert np.abs(exp_right(S, M).rep - U.rep).max() <= 1e-9
        assert np.abs(S.rep - S.rep.T).max() <= 1e-9


@criterion(15, "end-to-end CLI", 90.0)
def test_c15_cli(tmp_path):
    from hyperop import cli
    cmd = [sys.executable, "-m", "hyperop.cli", "verify", "all", "--seed", "42"]
    runs = [subprocess.run(cmd, capture_output=True) for _ in range(2)]
    assert all(r.returncode == 0 for r in runs), runs[0].stderr.decode()
    assert runs[0].stdout == runs[1].stdout
    assert json.loads(runs[0].stdout)["status"] == "pass"

    src = tmp_path / "diag.json"
    src.write_text(json.dumps({"algebra": "H", "n": 3, "entries": [[[0, 1], 0, 0], [0, [1, 0, 1], 0], [0, 0, 2]]}))
    out = tmp_path / "spectrum.json"
    assert cli.main(["spectrum", str(src), "--mode", "diag", "--report", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["points"] == [[0, 1, 0, 0], [1, 0, 1, 0], [2, 0, 0, 0]]
    assert rep["norm"] == 2.0


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    warnings.simplefilter("ignore")
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                if name == "test_c15_cli":
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                pass
    print("\n".join(RESULTS))
    sys.exit(0 if all(" PASS " in line for line in RESULTS) else 1)
