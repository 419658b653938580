"""Seeded property suites, one per module, producing machine-readable reports."""

from __future__ import annotations

import warnings
import zlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .algebra import (AlgebraTag, Hypercomplex, associator, component_extract_batch, get_algebra, power)
from .errors import InputError
from .jsonio import dumps

SUITES = ("algebra", "kmodule", "operator", "spectral", "calculus", "projections", "states")
DEFAULT_TRIALS = {"algebra": 1000, "kmodule": 50, "operator": 30, "spectral": 20,
                  "calculus": 15, "projections": 15, "states": 10}


def make_rng(seed: int, *labels: str) -> np.random.Generator:
    """Counter-based stream keyed by the seed and a stable hash of the labels."""
    h = zlib.crc32("/".join(labels).encode()) if labels else 0
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), h]))


@dataclass
class PropertyRecord:
    name: str
    ref: str
    trials: int
    passed: int
    max_residual: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.passed == self.trials and np.isfinite(self.max_residual)

    def to_json(self) -> dict:
        return {"name": self.name, "ref": self.ref, "trials": self.trials, "passed": self.passed,
                "max_residual": self.max_residual, "tolerance": self.tolerance, "ok": self.ok}


@dataclass
class VerifyReport:
    suite: str
    seed: int
    trials: int | None
    records: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.records)

    @property
    def status(self) -> str:
        return "pass" if self.ok else "fail"

    def to_json(self) -> dict:
        return {"suite": self.suite, "seed": self.seed, "trials": self.trials, "status": self.status,
                "properties": [r.to_json() for r in self.records]}

    def dumps(self) -> str:
        return dumps(self.to_json())


_REGISTRY: dict[str, list] = {s: [] for s in SUITES}


def prop(suite: str, name: str, ref: str, tol: float):
    def deco(fn: Callable):
        _REGISTRY[suite].append((name, ref, tol, fn))
        return fn
    return deco


def _tags():
    return (get_algebra("H"), get_algebra("O"))


def _mul(tag: AlgebraTag, a, b):
    return kernels.mul_batch(a, b, tag.idx, tag.sgn)


def _conj(a):
    out = -a
    out[..., 0] = a[..., 0]
    return out


def _rel(x: float, scale: float) -> float:
    return x / max(1.0, scale)


# -- algebra -------------------------------------------------------------------------------


@prop("algebra", "norm_multiplicativity", "|ab| = |a||b|", 1e-13)
def _p_norm(rng, trials, tag=None):
    out = []
    for t in (tag,) if tag else _tags():
        a = rng.standard_normal((trials, t.dim))
        b = rng.standard_normal((trials, t.dim))
        na, nb = np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1)
        out.extend(np.abs(np.linalg.norm(_mul(t, a, b), axis=1) - na * nb) / np.maximum(1.0, na * nb))
    return out


@prop("algebra", "alternativity", "(aa)b = a(ab), (ba)a = b(aa)", 1e-13)
def _p_alt(rng, trials, tag=None):
    out = []
    for t in (tag,) if tag else _tags():
        a = rng.standard_normal((trials, t.dim))
        b = rng.standard_normal((trials, t.dim))
        aa = _mul(t, a, a)
        r1 = np.linalg.norm(_mul(t, aa, b) - _mul(t, a, _mul(t, a, b)), axis=1)
        r2 = np.linalg.norm(_mul(t, _mul(t, b, a), a) - _mul(t, b, aa), axis=1)
        scale = np.maximum(1.0, np.linalg.norm(a, axis=1) ** 2 * np.linalg.norm(b, axis=1))
        out.extend(np.maximum(r1, r2) / scale)
    return out


@prop("algebra", "conjugation_antiautomorphism", "conj(ab) = conj(b) conj(a)", 1e-13)
def _p_conj(rng, trials, tag=None):
    out = []
    for t in (tag,) if tag else _tags():
        a = rng.standard_normal((trials, t.dim))
        b = rng.standard_normal((trials, t.dim))
        r = np.linalg.norm(_conj(_mul(t, a, b)) - _mul(t, _conj(b), _conj(a)), axis=1)
        out.extend(r / np.maximum(1.0, np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)))
    return out


@prop("algebra", "power_commutation", "z^m z^n = z^n z^m", 1e-12)
def _p_pow(rng, trials, tag=None):
    out = []
    for t in (tag,) if tag else _tags():
        for _ in range(max(1, trials // 50)):
            z = Hypercomplex(t, rng.standard_normal(t.dim) / 2)
            m, n = (int(k) for k in rng.integers(0, 6, size=2))
            a, b = power(z, m), power(z, n)
            out.append((a * b - b * a).norm() / max(1.0, a.norm() * b.norm()))
    return out


@prop("algebra", "real_centre", "real scalars commute with everything", 0.0)
def _p_centre(rng, trials, tag=None):
    out = []
    for t in (tag,) if tag else _tags():
        z = rng.standard_normal((trials, t.dim))
        c = np.zeros((trials, t.dim))
        c[:, 0] = rng.standard_normal(trials)
        out.extend(np.max(np.abs(_mul(t, c, z) - _mul(t, z, c)), axis=1))
    return out


@prop("algebra", "octonion_associator_witness", "(ij)l - i(jl) = 2 kl", 0.0)
def _p_witness(rng, trials, tag=None):
    t = get_algebra("O")
    g = [Hypercomplex.generator(t, p) for p in range(8)]
    a = associator(g[1], g[2], g[4])
    want = 2 * g[7].coeffs
    return [float(np.max(np.abs(a.coeffs - want)))]


@prop("algebra", "component_extraction", "conj-identity extraction recovers coordinates", 1e-13)
def _p_extract(rng, trials, tag=None):
    out = []
    for t in (tag,) if tag else _tags():
        z = rng.standard_normal((trials, t.dim))
        got = component_extract_batch(t, z)
        out.extend(np.max(np.abs(got - z), axis=1) / np.maximum(1.0, np.linalg.norm(z, axis=1)))
    return out


# -- kmodule --------------------------------------------------------------------------------------


def _kv(tag, n, rng):
    from .kmodule import random_kvector
    return random_kvector(tag, n, rng)


@prop("kmodule", "scalar_product_axioms", "hermitian symmetry, additivity, right/left scalar rules", 1e-12)
def _p_axioms(rng, trials):
    from .kmodule import inner
    out = []
    for t in _tags():
        for _ in range(trials):
            n = int(rng.integers(1, 4))
            x, y, z = _kv(t, n, rng), _kv(t, n, rng), _kv(t, n, rng)
            a = Hypercomplex(t, rng.standard_normal(t.dim))
            b = Hypercomplex(t, rng.standard_normal(t.dim))
            r = (inner(x, y) - inner(y, x).conj()).norm()
            r = max(r, (inner(x, y + z) - inner(x, y) - inner(x, z)).norm())
            xx = inner(x, x)
            r = max(r, float(np.linalg.norm(xx.coeffs[1:])), abs(xx.re - x.norm() ** 2))
            if t.kind == "H":
                r = max(r, (inner(x.rmul(a), y.rmul(b)) - a.conj() * inner(x, y) * b).norm())
            else:
                r = max(r, (inner(x.rmul(a), x) - a.conj() * inner(x, x)).norm())
            out.append(_rel(r, x.norm() * y.norm() * (1 + a.norm() * b.norm()) + z.norm() * x.norm()))
    return out


@prop("kmodule", "cauchy_schwarz", "|<x;y>|^2 <= <x;x><y;y>", 1e-12)
def _p_cs(rng, trials):
    from .kmodule import inner
    out = []
    for t in _tags():
        for _ in range(trials):
            n = int(rng.integers(1, 5))
            x, y = _kv(t, n, rng), _kv(t, n, rng)
            if rng.random() < 0.3:
                y = x.rmul(Hypercomplex(t, rng.standard_normal(t.dim)))
            gap = inner(x, y).norm() ** 2 - x.norm() ** 2 * y.norm() ** 2
            out.append(max(0.0, gap) / max(1.0, x.norm() ** 2 * y.norm() ** 2))
    return out


@prop("kmodule", "orthogonality_equivalence", "K-orthogonal to Y iff real-orthogonal to its right span", 1e-10)
def _p_orth(rng, trials):
    from .kmodule import inner, orth_complement, right_span_columns
    out = []
    t = get_algebra("H")
    for _ in range(trials):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, n))
        Y = [_kv(t, n, rng) for _ in range(k)]
        W = orth_complement(Y)
        cols = right_span_columns(Y)
        for w in W:
            kz = max(inner(y, w).norm() for y in Y)
            rz = float(np.max(np.abs(cols.T @ w.flat)))
            out.append(max(kz, rz))
        # a vector with a component in the span fails both
        v = W[0] + Y[0] if W else Y[0]
        kz = max(inner(y, v).norm() for y in Y)
        rz = float(np.max(np.abs(cols.T @ v.flat)))
        out.append(0.0 if (kz > 1e-6) == (rz > 1e-6) else 1.0)
    return out


@prop("kmodule", "norming_functional", "distance functional attains the norm", 1e-12)
def _p_norming(rng, trials):
    from .kmodule import distance_functional
    out = []
    for t in _tags():
        for _ in range(trials):
            x = _kv(t, int(rng.integers(1, 4)), rng)
            f = distance_functional([], x)
            # |f| = 1/|x| and f(x) = 1, so |f(x)| / |f| = |x|
            out.append(abs(f(x).norm() / f.norm() - x.norm()) / max(1.0, x.norm()))
    return out


# -- operator --------------------------------------------------------------------------------------


@prop("operator", "c_star_identity", "||T*T|| = ||T||^2, ||T*|| = ||T||", 1e-10)
def _p_cstar(rng, trials):
    from .operators import adjoint, compose, random_op
    out = []
    for t in _tags():
        for _ in range(trials):
            T = random_op(t, int(rng.integers(1, 5)), rng)
            nT = T.norm()
            r1 = abs(compose(adjoint(T), T).norm() - nT ** 2) / nT ** 2
            r2 = abs(adjoint(T).norm() - nT) / nT
            out.append(max(r1, r2))
    return out


@prop("operator", "adjoint_antihomomorphism", "(UT)* = T*U*, T** = T", 0.0)
def _p_anti(rng, trials):
    from .operators import adjoint, compose, random_op
    out = []
    for t in _tags():
        for _ in range(trials):
            n = int(rng.integers(1, 4))
            U, T = random_op(t, n, rng), random_op(t, n, rng)
            r = np.max(np.abs(adjoint(compose(U, T)).rep - compose(adjoint(T), adjoint(U)).rep))
            r = max(r, np.max(np.abs(adjoint(adjoint(T)).rep - T.rep)))
            out.append(float(r))
    return out


@prop("operator", "scalar_involution", "(bT)* = T* conj(b)", 1e-11)
def _p_scal(rng, trials):
    from .operators import adjoint, compose, left_scalar_op, random_op, scalar_op
    out = []
    for t in _tags():
        for _ in range(trials):
            n = int(rng.integers(1, 4))
            T = random_op(t, n, rng)
            b = Hypercomplex(t, rng.standard_normal(t.dim))
            lhs = adjoint(left_scalar_op(b, T))
            rhs = compose(adjoint(T), scalar_op(t, n, b.conj()))
            out.append(float(np.max(np.abs(lhs.rep - rhs.rep))) / max(1.0, b.norm() * T.norm()))
    return out


@prop("operator", "commuting_components_normal", "commuting components give a normal operator", 1e-10)
def _p_normal(rng, trials):
    from .operators import from_k_matrix
    out = []
    t = get_algebra("H")
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        X = rng.standard_normal((n, n))
        S = X + X.T
        # polynomials in one symmetric matrix commute pairwise
        comps = [sum(c * np.linalg.matrix_power(S, k) for k, c in enumerate(rng.standard_normal(3)))
                 for _ in range(t.dim)]
        entries = np.stack(comps, axis=-1)
        T = from_k_matrix(t, entries)
        TT = T.rep @ T.rep.T - T.rep.T @ T.rep
        out.append(float(np.max(np.abs(TT))) / max(1.0, T.norm() ** 2))
    return out


# -- spectral -------------------------------------------------------------------------------------


def _sa(t, n, rng):
    from .operators import random_selfadjoint
    return random_selfadjoint(t, n, rng)


@prop("spectral", "adjoint_spectrum_conjugate", "sp(T*) = conj sp(T)", 1e-9)
def _p_spconj(rng, trials):
    from .spectral import spectrum_left_diagonal
    out = []
    for t in _tags():
        for _ in range(trials):
            bs = [Hypercomplex(t, rng.standard_normal(t.dim)) for _ in range(int(rng.integers(1, 4)))]
            a = spectrum_left_diagonal(bs).points
            b = spectrum_left_diagonal([x.conj() for x in bs]).points
            ca = np.array([p.conj().coeffs for p in a])
            cb = np.array([p.coeffs for p in b])
            d = np.max(np.min(np.linalg.norm(ca[:, None] - cb[None], axis=2), axis=1))
            out.append(float(d))
    return out


@prop("spectral", "resolvent_set_open", "resolvent exists on a ball around a regular point", 0.0)
def _p_open(rng, trials):
    from .spectral import resolvent
    out = []
    for t in _tags():
        for _ in range(trials):
            T = _sa(t, int(rng.integers(1, 4)), rng)
            z = Hypercomplex(t, np.r_[T.norm() + 1.0, rng.standard_normal(t.dim - 1)])
            R = resolvent(T, z)
            rad = 1.0 / (2 * R.norm())
            dz = rng.standard_normal(t.dim)
            dz *= rad * rng.random() / np.linalg.norm(dz)
            try:
                resolvent(T, Hypercomplex(t, z.coeffs + dz))
                out.append(0.0)
            except Exception:
                out.append(1.0)
    return out


@prop("spectral", "spectral_integral_identities", "norm, adjoint and resolvent identities", 1e-8)
def _p_integral(rng, trials):
    from .kmodule import random_kvector
    from .operators import adjoint
    from .spectral import resolvent, spectral_decomposition, spectral_integral
    out = []
    for t in _tags():
        for _ in range(trials):
            n = int(rng.integers(1, 5))
            T = _sa(t, n, rng)
            dec = spectral_decomposition(T)
            x = random_kvector(t, n, rng)
            c = rng.standard_normal(3)
            f = lambda z: c[0] + c[1] * z + c[2] * np.sin(z)
            fT = spectral_integral(dec, f)
            lhs = fT.apply(x).norm() ** 2
            rhs = sum(f(l) ** 2 * P(x).norm() ** 2 for l, P in dec.pairs)
            r = abs(lhs - rhs) / max(1.0, rhs)
            r = max(r, float(np.max(np.abs(adjoint(fT).rep - fT.rep))))
            q = 2 + T.norm()
            R = resolvent(T, Hypercomplex.real(t, q))
            Ri = spectral_integral(dec, lambda z: 1.0 / (q - z))
            r = max(r, float(np.max(np.abs(R.rep - Ri.rep))))
            out.append(r)
    return out


@prop("spectral", "normal_classification", "unitary/selfadjoint/positive spectra on circle/line/half-line", 1e-9)
def _p_classify(rng, trials):
    from .calculus import exp_group
    from .operators import compose, random_slice_selfadjoint
    from .spectral import spectrum_selfadjoint
    out = []
    t = get_algebra("H")
    M = Hypercomplex.generator(t, 1)
    for _ in range(trials):
        n = int(rng.integers(1, 3))
        B = random_slice_selfadjoint(t, n, rng, M)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            U = exp_group(B, M, 1.0)
        r = 0.0
        # U is complex-linear for L_M, so its slice spectrum is its complex eigenvalues
        Ju = np.linalg.eigvals(U.rep)
        r = max(r, float(np.max(np.abs(np.abs(Ju) - 1.0))))
        S = spectrum_selfadjoint(B)
        r = max(r, max(float(np.linalg.norm(p.coeffs[1:])) for p in S.points))
        P = compose(B, B)
        sp = spectrum_selfadjoint(P)
        r = max(r, max(0.0, -min(float(p.coeffs[0]) for p in sp.points)))
        out.append(r)
    return out


@prop("spectral", "zero_radius_normal_is_zero", "normal A with r(A) = 0 has ||A|| = 0", 1e-8)
def _p_radius(rng, trials):
    from .spectral import spectral_radius
    out = []
    for t in _tags():
        for _ in range(trials):
            T = _sa(t, int(rng.integers(1, 4)), rng)
            r = spectral_radius(T).value
            out.append(abs(r - T.norm()) / T.norm())
    return out


# -- calculus ---------------------------------------------------------------------------------------


def _rpoly(t, rng, deg):
    from .calculus import PolySpec
    return PolySpec.from_coeffs(t, rng.standard_normal(deg + 1).tolist())


@prop("calculus", "homomorphism_linearity", "(fg)(T) = f(T)g(T), (af+bg)(T) = af(T)+bg(T)", 1e-8)
def _p_hom(rng, trials):
    from .calculus import PolySpec, poly_eval
    out = []
    for t in _tags():
        for _ in range(trials):
            T = _sa(t, int(rng.integers(1, 4)), rng)
            f, g = _rpoly(t, rng, 2), _rpoly(t, rng, 3)
            fg = poly_eval(T, f.multiply(g)).rep
            r = float(np.max(np.abs(fg - poly_eval(T, f).rep @ poly_eval(T, g).rep))) / max(1.0, np.abs(fg).max())
            a, b = rng.standard_normal(2)
            cf = np.zeros(4)
            cf[:3] += a * np.array([float(c[0].coeffs[0]) for c, _ in f.terms])
            cf += b * np.array([float(c[0].coeffs[0]) for c, _ in g.terms])
            lin = poly_eval(T, PolySpec.from_coeffs(t, cf.tolist())).rep
            r = max(r, float(np.max(np.abs(lin - a * poly_eval(T, f).rep - b * poly_eval(T, g).rep))) / max(1.0, np.abs(lin).max()))
            out.append(r)
    return out


@prop("calculus", "spectral_mapping", "sp(p(T)) = p(sp(T))", 1e-8)
def _p_map(rng, trials):
    from .calculus import poly_eval
    from .spectral import spectrum_selfadjoint
    out = []
    for t in _tags():
        for _ in range(trials):
            T = _sa(t, int(rng.integers(1, 4)), rng)
            p = _rpoly(t, rng, 3)
            sp = sorted(float(q.coeffs[0]) for q in spectrum_selfadjoint(T).points)
            img = np.array([p.real_call(s) for s in sp])
            got = np.linalg.eigvalsh(poly_eval(T, p).rep)
            d1 = np.max(np.min(np.abs(got[:, None] - img[None]), axis=1))
            d2 = np.max(np.min(np.abs(img[:, None] - got[None]), axis=1))
            out.append(float(max(d1, d2)) / max(1.0, np.abs(img).max()))
    return out


@prop("calculus", "composition", "(g o f)(T) = g(f(T))", 1e-8)
def _p_comp(rng, trials):
    from .calculus import poly_eval
    out = []
    for t in _tags():
        for _ in range(trials):
            T = _sa(t, int(rng.integers(1, 4)), rng)
            f, g = _rpoly(t, rng, 2), _rpoly(t, rng, 2)
            lhs = poly_eval(T, g.compose(f)).rep
            rhs = poly_eval(poly_eval(T, f), g).rep
            out.append(float(np.max(np.abs(lhs - rhs))) / max(1.0, np.abs(lhs).max()))
    return out


@prop("calculus", "positive_cone", "cone closure; A and -A positive forces A = 0; A*A >= 0", 1e-10)
def _p_cone(rng, trials):
    from .operators import adjoint, compose, random_right_linear
    out = []
    for t in _tags():
        for _ in range(trials):
            n = int(rng.integers(1, 4))
            X, Y = random_right_linear(t, n, rng), random_right_linear(t, n, rng)
            P = compose(adjoint(X), X).rep
            Q = compose(adjoint(Y), Y).rep
            a, b = rng.random(2)
            S = a * P + b * Q
            r = max(0.0, -float(np.linalg.eigvalsh((S + S.T) / 2)[0])) / max(1.0, np.abs(S).max())
            r = max(r, max(0.0, -float(np.linalg.eigvalsh((P + P.T) / 2)[0])) / max(1.0, np.abs(P).max()))
            # the only A with A and -A both positive is 0: the spectrum of A decides
            w = np.linalg.eigvalsh((P + P.T) / 2)
            both = w.min() >= -1e-10 and (-w).min() >= -1e-10
            r = max(r, float(both and np.abs(P).max() > 1e-9))
            out.append(r)
    return out


@prop("calculus", "monotone_root", "0 <= A <= B implies sqrt A <= sqrt B", 1e-9)
def _p_mono(rng, trials):
    from .calculus import sqrt_positive
    from .operators import QuasilinearOp, adjoint, compose, random_right_linear
    out = []
    for t in _tags():
        for _ in range(trials):
            n = int(rng.integers(1, 4))
            X, Y = random_right_linear(t, n, rng), random_right_linear(t, n, rng)
            A = compose(adjoint(X), X)
            B = QuasilinearOp(t, n, A.rep + compose(adjoint(Y), Y).rep)
            A = QuasilinearOp(t, n, (A.rep + A.rep.T) / 2)
            B = QuasilinearOp(t, n, (B.rep + B.rep.T) / 2)
            D = sqrt_positive(B).rep - sqrt_positive(A).rep
            out.append(max(0.0, -float(np.linalg.eigvalsh((D + D.T) / 2)[0])))
    return out


@prop("calculus", "fractional_semigroup", "A^b A^c = A^(b+c)", 1e-9)
def _p_semi(rng, trials):
    from .calculus import fractional_power
    from .operators import QuasilinearOp, adjoint, compose, random_right_linear
    out = []
    exps = (-1.0, 0.5, 1.0, 2.0)
    for t in _tags():
        for _ in range(trials):
            n = int(rng.integers(1, 4))
            X = random_right_linear(t, n, rng)
            A = compose(adjoint(X), X).rep + np.eye(t.dim * n)
            A = QuasilinearOp(t, n, (A + A.T) / 2)
            b, c = (float(e) for e in rng.choice(exps, size=2))
            lhs = fractional_power(A, b).rep @ fractional_power(A, c).rep
            rhs = fractional_power(A, b + c).rep
            out.append(float(np.max(np.abs(lhs - rhs))) / max(1.0, np.abs(rhs).max()))
    return out


# -- projections -------------------------------------------------------------------------------------


def _nested_pair(t, n, rng):
    from .kmodule import random_kvector
    from .projections import projection_onto
    k = int(rng.integers(1, n))
    vs = [random_kvector(t, n, rng) for _ in range(n)]
    j = int(rng.integers(k, n + 1))
    return projection_onto(vs[:k]), projection_onto(vs[:j])


@prop("projections", "difference_is_projection", "E <= F gives a projection F - E", 1e-10)
def _p_diff(rng, trials):
    from .projections import difference
    out = []
    for t in _tags():
        for _ in range(trials):
            E, F = _nested_pair(t, int(rng.integers(2, 4)), rng)
            D = difference(F, E).op.rep
            out.append(max(float(np.max(np.abs(D @ D - D))), float(np.max(np.abs(D - D.T)))))
    return out


@prop("projections", "chain_join_stabilises", "cumulative joins of a nested chain stabilise within n steps", 1e-9)
def _p_chain(rng, trials):
    from .kmodule import random_kvector
    from .projections import join, projection_onto
    out = []
    for t in _tags():
        for _ in range(trials):
            n = int(rng.integers(2, 4))
            vs = [random_kvector(t, n, rng) for _ in range(n)]
            chain = [projection_onto(vs[: k + 1]) for k in range(n)]
            acc = chain[0]
            for P in chain[1:]:
                acc = join(acc, P)
            out.append(float(np.max(np.abs(acc.op.rep - chain[-1].op.rep))))
    return out


@prop("projections", "range_of_product", "R(EF) = E - E meet (I - F)", 1e-9)
def _p_range(rng, trials):
    from .kmodule import random_kvector
    from .operators import compose
    from .projections import complement, meet, projection_onto, range_projection
    out = []
    t = get_algebra("H")
    for _ in range(trials):
        n = int(rng.integers(2, 4))
        E = projection_onto([random_kvector(t, n, rng) for _ in range(int(rng.integers(1, n)))])
        F = projection_onto([random_kvector(t, n, rng) for _ in range(int(rng.integers(1, n)))])
        lhs = range_projection(compose(E.op, F.op)).op.rep
        rhs = E.op.rep - meet(E, complement(F)).op.rep
        out.append(float(np.max(np.abs(lhs - rhs))))
    return out


@prop("projections", "constructed_invariants", "every built projection passes the invariant set", 1e-9)
def _p_inv(rng, trials):
    from .kmodule import random_kvector
    from .operators import random_right_linear
    from .projections import complement, join, kernel_projection, meet, projection_onto, range_projection
    out = []
    for t in _tags():
        for _ in range(trials):
            n = int(rng.integers(2, 4))
            E = projection_onto([random_kvector(t, n, rng) for _ in range(int(rng.integers(1, n)))])
            F = projection_onto([random_kvector(t, n, rng) for _ in range(int(rng.integers(1, n)))])
            T = random_right_linear(t, n, rng)
            built = [E, complement(E), join(E, F), meet(E, F), range_projection(T), kernel_projection(T)]
            out.append(max(max(P.invariant_residuals().values()) for P in built))
    return out


# -- states -------------------------------------------------------------------------------------------


def _pos_state(t, n, rng):
    from .kmodule import random_kvector
    from .states import density_state
    k = int(rng.integers(1, 3))
    w = rng.random(k)
    w /= w.sum()
    return density_state([random_kvector(t, n, rng, unit=True) for _ in range(k)], w.tolist())


@prop("states", "cauchy_schwarz", "|rho(B*A)|^2 <= rho(A*A) rho(B*B)", 1e-10)
def _p_scs(rng, trials):
    from .operators import random_right_linear
    out = []
    for t in _tags():
        for _ in range(trials):
            n = int(rng.integers(1, 4))
            rho = _pos_state(t, n, rng)
            A, B = random_right_linear(t, n, rng).rep, random_right_linear(t, n, rng).rep
            lhs = rho(B.T @ A).norm() ** 2
            rhs = rho(A.T @ A).re * rho(B.T @ B).re
            out.append(max(0.0, lhs - rhs) / max(1.0, rhs))
    return out


@prop("states", "positive_is_hermitian", "rho(A*) = conj rho(A)", 1e-10)
def _p_herm(rng, trials):
    from .operators import random_right_linear
    out = []
    for t in _tags():
        for _ in range(trials):
            n = int(rng.integers(1, 4))
            rho = _pos_state(t, n, rng)
            A = random_right_linear(t, n, rng).rep
            out.append((rho(A.T) - rho(A).conj()).norm() / max(1.0, np.linalg.norm(A, 2)))
    return out


@prop("states", "left_kernel_ideal", "rho(A*A) = 0 implies rho((BA)*(BA)) = 0", 1e-9)
def _p_ideal(rng, trials):
    from .kmodule import random_kvector
    from .operators import random_right_linear
    from .projections import projection_onto
    from .states import vector_state
    out = []
    t = get_algebra("H")
    for _ in range(trials):
        n = int(rng.integers(2, 4))
        x = random_kvector(t, n, rng, unit=True)
        rho = vector_state(x)
        # A kills x: A = C (I - P_x)
        P = projection_onto([x]).op.rep
        A = random_right_linear(t, n, rng).rep @ (np.eye(P.shape[0]) - P)
        B = random_right_linear(t, n, rng).rep
        BA = B @ A
        out.append(max(rho(A.T @ A).norm(), rho(BA.T @ BA).norm()))
    return out


@prop("states", "gns_contraction", "||pi(A)|| <= ||A||", 1e-9)
def _p_gnsc(rng, trials):
    from .states import gns_build, right_linear_basis
    out = []
    t = get_algebra("H")
    gens = list(right_linear_basis(t, 2))
    for _ in range(max(1, trials // 3)):
        res = gns_build(gens, _pos_state(t, 2, rng), rng=rng, checks=4)
        out.append(max(0.0, res.residuals["contraction_excess"]))
    return out


@prop("states", "lattice_norm_additivity", "||p|| = p+(1) + p-(1)", 0.0)
def _p_lat(rng, trials):
    from .states import pos_part, weight_functional, weight_norm
    out = []
    for t in _tags():
        for _ in range(trials):
            k = int(rng.integers(1, 6))
            # dyadic weights keep the sums exact
            w = rng.integers(-8, 9, size=k) / 4.0
            p = weight_functional(t, range(k), w)
            pp, pm = pos_part(p)
            out.append(abs(weight_norm(p) - (pp.value_at_one() + pm.value_at_one())))
    return out


@prop("states", "variation_bound", "V(mu) <= 2^(2^(m+2)) sup_U |mu(U)|", 0.0)
def _p_var(rng, trials):
    from .states import KMeasure, sup_set_value, variation
    out = []
    for t in _tags():
        for _ in range(trials):
            P = int(rng.integers(1, 7))
            mu = KMeasure(t, range(P), rng.standard_normal((P, t.dim, t.dim)))
            bound = 2.0 ** (2 ** (t.rank + 2)) * sup_set_value(mu)
            out.append(max(0.0, variation(mu) - bound))
    return out


# -- runner -------------------------------------------------------------------------------------------


def run_suite(suite: str, seed: int = 0, trials: int | None = None) -> VerifyReport:
    if suite not in _REGISTRY:
        raise InputError(f"unknown suite {suite!r}; expected one of {', '.join(SUITES)} or 'all'")
    k = trials if trials is not None else DEFAULT_TRIALS[suite]
    rep = VerifyReport(suite, int(seed), trials)
    for name, ref, tol, fn in _REGISTRY[suite]:
        rng = make_rng(seed, suite, name)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                res = [float(r) for r in fn(rng, k)]
            except Exception as exc:  # a crash counts as a failed property
                res = [float("inf")]
                ref = f"{ref} [error: {type(exc).__name__}: {exc}]"
        passed = sum(1 for r in res if r <= tol)
        rep.records.append(PropertyRecord(name, ref, len(res), passed, max(res, default=0.0), tol))
    return rep


def run(suites, seed: int = 0, trials: int | None = None) -> VerifyReport:
    """Run several suites and merge them, in fixed module order."""
    if suites == "all":
        suites = SUITES
    if isinstance(suites, str):
        suites = [suites]
    suites = list(suites)
    for s in suites:
        if s not in _REGISTRY:
            raise InputError(f"unknown suite {s!r}; expected one of {', '.join(SUITES)} or 'all'")
    merged = VerifyReport("+".join(s for s in SUITES if s in suites) if len(suites) > 1 else suites[0],
                          int(seed), trials)
    for s in SUITES:
        if s in suites:
            r = run_suite(s, seed, trials)
            for rec in r.records:
                rec.name = f"{s}.{rec.name}"
                merged.records.append(rec)
    return merged
