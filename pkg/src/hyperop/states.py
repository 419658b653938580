"""States and functionals, GNS, interpolation, and finite K-valued measures."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .algebra import Hypercomplex, _check_unit_imaginary, as_tag
from .errors import (AbsoluteContinuityError, ClosureCapError, InputError, NonOrthogonalError,
                     PreconditionError, SignedGramError, StateMismatchError, UnsupportedAlgebraError)
from .kmodule import KVector, inner, right_span_basis
from .operators import QuasilinearOp, random_right_linear, scalar_block

NORM_SLACK = 2e-2
GNS_CAP = 512


def _gen_rights(tag, n: int) -> np.ndarray:
    """``R_{i_p}`` acting on flat vectors of K^n, shape ``(m+1, N, N)``."""
    gens = [Hypercomplex.generator(tag, p) for p in range(tag.dim)]
    return np.stack([scalar_block(tag, n, g, "right") for g in gens])


def right_linear_basis(tag, n: int) -> np.ndarray:
    """Frobenius-orthonormal basis of the right-linear operators on K^n, shape ``(D, N, N)``."""
    tag = as_tag(tag)
    d = tag.dim
    if tag.kind == "O":
        # right-linear octonion operators are real matrices tensored with I_8
        blocks = [np.eye(d)]
    else:
        blocks = [scalar_block(tag, 1, Hypercomplex.generator(tag, p)) for p in range(d)]
    out = []
    for k in range(n):
        for l in range(n):
            E = np.zeros((n, n))
            E[k, l] = 1.0
            for B in blocks:
                out.append(np.kron(E, B) / np.sqrt(d))
    return np.stack(out)


# -- operator functionals --------------------------------------------------------------------


class StateFunctional:
    """A quasilinear functional in vector form or weight form.

    Vector form: ``rho(A) = sum_j c_j <y_j; A x_j>``; the density form is the
    special case ``y_j = x_j``.  Weight form lives on a finite set ``V``:
    ``p(f) = sum_v sum_c w[v, c] f_c(v) i_c``, with the lattice order carried by
    column 0 (real functions) and columns ``c >= 1`` fixing the values ``p(i_c)``.
    """

    def __init__(self, tag, kind: str, coeffs=None, xs=None, ys=None, V=None, w=None):
        self.tag = as_tag(tag)
        if kind not in ("vector", "density", "weights"):
            raise InputError(f"unknown functional kind {kind!r}")
        self.kind = kind
        self._cache: dict = {}
        if kind == "weights":
            V = tuple(V)
            w = np.array(w, dtype=np.float64)
            if w.ndim == 1:
                w = np.repeat(w[:, None], self.tag.dim, axis=1)
            if w.shape != (len(V), self.tag.dim):
                raise InputError(f"weights must have shape ({len(V)}, {self.tag.dim})")
            if not np.all(np.isfinite(w)):
                raise InputError("weights must be finite")
            w.setflags(write=False)
            self.V, self.w = V, w
            self.coeffs, self.xs, self.ys = None, (), ()
            return
        xs = tuple(xs)
        ys = xs if kind == "density" or ys is None else tuple(ys)
        coeffs = np.array(coeffs, dtype=np.float64).reshape(-1)
        if not (len(xs) == len(ys) == coeffs.size):
            raise InputError("coefficients and vectors must have equal length")
        if not xs:
            raise InputError("empty functional needs at least one vector (use zero_functional)")
        for v in xs + ys:
            xs[0]._check(v)
        if xs[0].tag != self.tag:
            raise InputError("vectors from a different algebra")
        self.coeffs, self.xs, self.ys = coeffs, xs, ys
        self.V, self.w = None, None

    # -- evaluation ----------------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.xs[0].n if self.xs else 0

    def __call__(self, A) -> Hypercomplex:
        if self.kind == "weights":
            return self._eval_table(A)
        if isinstance(A, QuasilinearOp):
            A = A.rep
        A = np.asarray(A, dtype=np.float64)
        acc = np.zeros(self.tag.dim)
        for c, x, y in zip(self.coeffs, self.xs, self.ys):
            Ax = KVector(self.tag, A @ x.flat)
            acc += c * inner(y, Ax).coeffs
        return Hypercomplex(self.tag, acc)

    def _eval_table(self, f) -> Hypercomplex:
        f = function_table(self.tag, self.V, f)
        return Hypercomplex(self.tag, np.einsum("vc,vc->c", self.w, f))

    def density_components(self) -> np.ndarray:
        """``D_p`` with ``rho(A)_p = tr(A D_p)``, shape ``(m+1, N, N)``."""
        if "D" not in self._cache:
            R = _gen_rights(self.tag, self.n)
            D = np.zeros((self.tag.dim, R.shape[1], R.shape[1]))
            for c, x, y in zip(self.coeffs, self.xs, self.ys):
                # <y; z>_p = (y i_p) . z
                D += c * np.einsum("i,pj->pij", x.flat, R @ y.flat)
            self._cache["D"] = D
        return self._cache["D"]

    def expectation(self) -> np.ndarray:
        """Projection of the real density onto the right-linear operators (sym part)."""
        if "E" not in self._cache:
            B = right_linear_basis(self.tag, self.n)
            D0 = self.density_components()[0]
            # tr(A D0) = <A, D0^T>_F
            c = np.einsum("bij,ji->b", B, D0)
            E = np.einsum("b,bij->ij", c, B)
            self._cache["E"] = (E + E.T) / 2
        return self._cache["E"]

    # -- flags ---------------------------------------------------------------------------

    @property
    def hermitian(self) -> bool:
        if self.kind == "weights":
            return True
        if "herm" not in self._cache:
            scale = max(1.0, float(np.sum(np.abs(self.coeffs))))
            worst = 0.0
            for A in right_linear_basis(self.tag, self.n):
                a = self(A).coeffs
                b = self(A.T).conj().coeffs
                worst = max(worst, float(np.max(np.abs(a - b))))
            self._cache["herm"] = worst <= 1e-10 * scale
        return self._cache["herm"]

    @property
    def positive(self) -> bool:
        if self.kind == "weights":
            return bool(np.all(self.w[:, 0] >= 0))
        if "pos" not in self._cache:
            ok = self.hermitian
            if ok:
                lam = np.linalg.eigvalsh(self.expectation())
                ok = bool(lam[0] >= -1e-10 * max(1.0, float(np.max(np.abs(lam)))))
            self._cache["pos"] = ok
        return self._cache["pos"]

    @property
    def state(self) -> bool:
        one = self.value_at_one()
        return self.positive and abs(one - 1.0) <= 1e-9

    def value_at_one(self) -> float:
        if self.kind == "weights":
            return float(np.sum(self.w[:, 0]))
        return float(np.trace(self.density_components()[0]))

    def analytic_norm(self) -> float | None:
        """Exact value of the norm candidate ``sup Re rho(A)`` over right-linear ``||A|| <= 1``."""
        if self.kind == "weights":
            return float(np.sum(np.abs(self.w[:, 0])))
        return float(np.sum(np.linalg.svd(self._real_part_rep(), compute_uv=False)))

    def _real_part_rep(self) -> np.ndarray:
        B = right_linear_basis(self.tag, self.n)
        D0 = self.density_components()[0]
        c = np.einsum("bij,ji->b", B, D0)
        return np.einsum("b,bij->ij", c, B)

    def extremal_candidate(self) -> np.ndarray:
        """A right-linear contraction ``A`` with ``Re rho(A) = analytic_norm``."""
        E = self._real_part_rep()
        u, _, vt = np.linalg.svd(E)
        # Re rho(A) = <A, E>_F, maximised over contractions by the polar factor of E
        return u @ vt

    # -- algebra ---------------------------------------------------------------------------

    def __sub__(self, other: "StateFunctional") -> "StateFunctional":
        return self + other.scaled(-1.0)

    def __add__(self, other: "StateFunctional") -> "StateFunctional":
        if self.kind == "weights" or other.kind == "weights":
            if self.kind != other.kind or self.V != other.V:
                raise InputError("weight forms on different sets")
            return StateFunctional(self.tag, "weights", V=self.V, w=self.w + other.w)
        kind = "density" if self.kind == other.kind == "density" else "vector"
        return StateFunctional(self.tag, kind, np.concatenate([self.coeffs, other.coeffs]),
                               self.xs + other.xs, self.ys + other.ys)

    def scaled(self, c: float) -> "StateFunctional":
        if self.kind == "weights":
            return StateFunctional(self.tag, "weights", V=self.V, w=c * self.w)
        return StateFunctional(self.tag, self.kind, c * self.coeffs, self.xs, self.ys)

    def __repr__(self):
        if self.kind == "weights":
            return f"StateFunctional[weights]({len(self.V)} points)"
        return f"StateFunctional[{self.kind}](terms={len(self.xs)}, n={self.n})"

    # -- JSON ---------------------------------------------------------------------------------

    def to_json(self) -> dict:
        if self.kind == "weights":
            return {"kind": "weights", "algebra": self.tag.kind, "V": list(self.V), "w": self.w.tolist()}
        if self.kind == "vector" and len(self.xs) == 1 and self.coeffs[0] == 1.0 and self.xs[0] is self.ys[0]:
            return {"kind": "vector", "x": self.xs[0].to_json()}
        if self.kind == "density":
            return {"kind": "density", "vectors": [x.to_json() for x in self.xs], "signs": self.coeffs.tolist()}
        return {"kind": "pairs", "coeffs": self.coeffs.tolist(),
                "x": [x.to_json() for x in self.xs], "y": [y.to_json() for y in self.ys]}

    @classmethod
    def from_json(cls, obj) -> "StateFunctional":
        try:
            kind = obj["kind"]
            if kind == "vector":
                x = KVector.from_json(obj["x"])
                return cls(x.tag, "vector", [1.0], [x], [x])
            if kind == "density":
                vs = [KVector.from_json(v) for v in obj["vectors"]]
                return cls(vs[0].tag, "density", obj["signs"], vs)
            if kind == "pairs":
                xs = [KVector.from_json(v) for v in obj["x"]]
                ys = [KVector.from_json(v) for v in obj["y"]]
                return cls(xs[0].tag, "vector", obj["coeffs"], xs, ys)
            if kind == "weights":
                return cls(obj.get("algebra", "H"), "weights", V=obj["V"], w=obj["w"])
        except (KeyError, TypeError, IndexError) as exc:
            raise InputError(f"malformed state JSON: {exc}") from exc
        raise InputError(f"unknown state kind {kind!r}")


def vector_state(x: KVector, tol: float = 1e-10) -> StateFunctional:
    """``w_x(A) = <x; A x>``."""
    if abs(x.norm() - 1.0) > tol:
        raise PreconditionError(f"vector state needs ||x|| = 1, got {x.norm():.12g}")
    return StateFunctional(x.tag, "vector", [1.0], [x], [x])


def density_state(vectors: Sequence[KVector], signs: Sequence[float]) -> StateFunctional:
    vectors = list(vectors)
    return StateFunctional(vectors[0].tag, "density", signs, vectors)


def zero_functional(tag, n: int) -> StateFunctional:
    tag = as_tag(tag)
    return StateFunctional(tag, "density", [0.0], [KVector.zeros(tag, n)])


# -- validation -------------------------------------------------------------------------------


@dataclass
class StateReport:
    rho_one: float
    norm_estimate: float
    analytic_norm: float | None
    positive_on_sample: bool
    norm_equals_one_value: bool
    agree: bool
    min_positive_value: float
    samples: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _unit_samples(tag, n: int, rng: np.random.Generator, count: int) -> list[np.ndarray]:
    out = []
    for _ in range(count):
        A = random_right_linear(tag, n, rng).rep
        out.append(A / np.linalg.norm(A, 2))
    return out


def functional_norm(rho: StateFunctional, rng: np.random.Generator, samples: int = 200,
                    extra: Sequence[np.ndarray] = ()) -> float:
    """Lower estimate of ``sup |rho(A)| / ||A||`` from random and extremal right-linear ``A``."""
    cands = _unit_samples(rho.tag, rho.n, rng, samples)
    cands.append(np.eye(rho.tag.dim * rho.n))
    cands.append(rho.extremal_candidate())
    cands.extend(extra)
    best = 0.0
    for A in cands:
        nA = np.linalg.norm(A, 2)
        if nA > 0:
            best = max(best, rho(A).norm() / nA)
    return float(best)


def state_validate(rho: StateFunctional, sample: Sequence | None = None, rng: np.random.Generator | None = None,
                   samples: int = 200, slack: float = NORM_SLACK) -> StateReport:
    """Check both directions of "positive iff ``||rho|| = rho(I)``" on a sample."""
    rng = rng if rng is not None else np.random.default_rng(0)
    if sample is None:
        sample = _unit_samples(rho.tag, rho.n, rng, samples)
    sample = [A.rep if isinstance(A, QuasilinearOp) else np.asarray(A) for A in sample]
    worst = np.inf
    imag = 0.0
    for A in sample:
        v = rho(A.T @ A)
        worst = min(worst, v.re)
        imag = max(imag, float(np.linalg.norm(v.coeffs[1:])))
    scale = max(1.0, float(np.sum(np.abs(rho.coeffs))))
    # the extremal candidate's negative part is the sharpest positivity witness
    lam, vecs = np.linalg.eigh(rho.expectation())
    neg = vecs[:, lam < 0]
    if neg.size:
        Pn = neg @ neg.T
        worst = min(worst, rho(Pn).re)
    pos = worst >= -1e-10 * scale and imag <= 1e-10 * scale
    one = rho.value_at_one()
    nrm = functional_norm(rho, rng, samples=max(16, len(sample) // 4), extra=sample[:8])
    eq = abs(nrm - one) <= slack * max(1.0, abs(one))
    return StateReport(one, nrm, rho.analytic_norm(), bool(pos), bool(eq), bool(pos == eq),
                       float(worst), len(sample))


# -- finite-V lattice and characters ---------------------------------------------------------------


def function_table(tag, V: Sequence, f) -> np.ndarray:
    """Normalise ``f`` (array, list of Hypercomplex, dict or callable) to a ``(|V|, m+1)`` table."""
    tag = as_tag(tag)
    if callable(f) and not isinstance(f, (np.ndarray, list, tuple, dict)):
        f = [f(v) for v in V]
    if isinstance(f, dict):
        try:
            f = [f[v] for v in V]
        except KeyError as exc:
            raise InputError(f"function undefined at {exc}") from exc
    if isinstance(f, (list, tuple)) and f and isinstance(f[0], Hypercomplex):
        f = [h.coeffs for h in f]
    arr = np.array(f, dtype=np.float64)
    if arr.ndim == 1:
        arr = np.concatenate([arr[:, None], np.zeros((arr.size, tag.dim - 1))], axis=1)
    if arr.shape != (len(V), tag.dim):
        raise InputError(f"function table must have shape ({len(V)}, {tag.dim})")
    return arr


def weight_functional(tag, V: Sequence, w) -> StateFunctional:
    return StateFunctional(tag, "weights", V=V, w=w)


def zero_like(p: StateFunctional) -> StateFunctional:
    """The lattice zero sharing ``p``'s values on ``i_1 .. i_m``."""
    w = np.array(p.w)
    w[:, 0] = 0.0
    return StateFunctional(p.tag, "weights", V=p.V, w=w)


def _require_weights(*ps: StateFunctional) -> None:
    for p in ps:
        if p.kind != "weights":
            raise PreconditionError("lattice operations need weight-form functionals")
    for p in ps[1:]:
        if p.V != ps[0].V:
            raise InputError("functionals on different point sets")


def _check_iq(p1: StateFunctional, p2: StateFunctional, atol: float = 1e-12) -> None:
    s1 = p1.w[:, 1:].sum(axis=0)
    s2 = p2.w[:, 1:].sum(axis=0)
    if np.max(np.abs(s1 - s2), initial=0.0) > atol * max(1.0, float(np.max(np.abs(s1), initial=0.0))):
        raise InputError("mismatched i_q values: p1(i_q) != p2(i_q)")


def lattice_join(p1: StateFunctional, p2: StateFunctional) -> StateFunctional:
    """``(p1 v p2)(f) = sup {p1(f1) + p2(f2) : f = f1 + f2}``, pointwise max on finite V."""
    _require_weights(p1, p2)
    _check_iq(p1, p2)
    w = np.array(p1.w)
    w[:, 0] = np.maximum(p1.w[:, 0], p2.w[:, 0])
    return StateFunctional(p1.tag, "weights", V=p1.V, w=w)


def lattice_meet(p1: StateFunctional, p2: StateFunctional) -> StateFunctional:
    _require_weights(p1, p2)
    _check_iq(p1, p2)
    w = np.array(p1.w)
    w[:, 0] = np.minimum(p1.w[:, 0], p2.w[:, 0])
    return StateFunctional(p1.tag, "weights", V=p1.V, w=w)


def pos_part(p: StateFunctional) -> tuple[StateFunctional, StateFunctional]:
    """``(p+, p-)`` with ``p+ = p v 0`` and ``p- = -(p ^ 0)``, both keeping ``p(i_q)``."""
    _require_weights(p)
    z = zero_like(p)
    plus = lattice_join(p, z)
    w = np.array(p.w)
    w[:, 0] = np.maximum(-p.w[:, 0], 0.0)
    return plus, StateFunctional(p.tag, "weights", V=p.V, w=w)


def weight_norm(p: StateFunctional) -> float:
    """``sup |p(f)|`` over real ``f`` with ``|f| <= 1``."""
    _require_weights(p)
    return float(np.sum(np.abs(p.w[:, 0])))


def character_eval(tag, V: Sequence, z0) -> StateFunctional:
    """Point evaluation ``p(f) = f(z0)``."""
    V = tuple(V)
    if z0 not in V:
        raise InputError(f"{z0!r} is not in V")
    tag = as_tag(tag)
    w = np.zeros((len(V), tag.dim))
    w[V.index(z0)] = 1.0
    return StateFunctional(tag, "weights", V=V, w=w)


def multiplicative_check(p: StateFunctional, rng: np.random.Generator | None = None, trials: int = 32,
                         atol: float = 1e-11) -> bool:
    """``p(fg) = p(f) p(g)`` on random tables and on all indicator pairs."""
    _require_weights(p)
    rng = rng if rng is not None else np.random.default_rng(0)
    tag, V = p.tag, p.V
    d = tag.dim
    pairs = []
    eye = np.eye(len(V))
    for a, b in itertools.product(range(len(V)), repeat=2):
        pairs.append((np.column_stack([eye[a], np.zeros((len(V), d - 1))]),
                      np.column_stack([eye[b], np.zeros((len(V), d - 1))])))
    for _ in range(trials):
        pairs.append((rng.standard_normal((len(V), d)), rng.standard_normal((len(V), d))))
    from .kernels import mul_batch
    for f, g in pairs:
        fg = mul_batch(f, g, tag.idx, tag.sgn)
        lhs = p(fg)
        rhs = p(f) * p(g)
        if (lhs - rhs).norm() > atol * max(1.0, p(f).norm() * p(g).norm()):
            return False
    return True


# -- Jordan decomposition -----------------------------------------------------------------------------


def _align_phase(q: KVector, refs: Sequence[KVector]) -> KVector:
    """Rotate ``q`` by a unit scalar on the right towards the reference it overlaps most."""
    best, coef = 0.0, None
    for r in refs:
        c = inner(q, r)
        if c.norm() > best:
            best, coef = c.norm(), c
    if coef is None or best < 1e-12:
        return q
    return q.rmul(Hypercomplex(q.tag, coef.coeffs / best))


def jordan_decompose(rho: StateFunctional) -> tuple[StateFunctional, StateFunctional]:
    """``rho = rho+ - rho-`` from the eigen-split of the density, with ``||rho|| = rho+(I) + rho-(I)``.

    The split reproduces ``rho`` on selfadjoint operators (and ``Re rho`` everywhere);
    K-valued vector states also depend on the phase of each vector, which the
    density does not see.
    """
    if rho.kind == "weights":
        return pos_part(rho)
    if not rho.hermitian:
        raise PreconditionError("Jordan decomposition needs a Hermitian functional")
    from .projections import GradedProjection

    E = rho.expectation()
    tag, n = rho.tag, rho.n
    lam, U = np.linalg.eigh(E)
    scale = max(float(np.max(np.abs(lam))), 1e-300)
    tol = 1e-9 * scale
    parts = {1: ([], []), -1: ([], [])}
    # cluster equal eigenvalues; each cluster is a graded subspace
    order = np.argsort(lam)
    groups: list[list[int]] = []
    for i in order:
        if abs(lam[i]) <= tol:
            continue
        if groups and abs(lam[i] - lam[groups[-1][-1]]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    for g in groups:
        val = float(np.mean(lam[g]))
        P = GradedProjection(tag, n, U[:, g])
        sgn = 1 if val > 0 else -1
        for q in P.basis:
            parts[sgn][0].append(_align_phase(q, rho.xs))
            # E restricted to a K-line is (weight / dim) times its projection
            parts[sgn][1].append(abs(val) * tag.dim)
    out = []
    for sgn in (1, -1):
        vecs, ws = parts[sgn]
        out.append(density_state(vecs, ws) if vecs else zero_functional(tag, n))
    return out[0], out[1]


# -- GNS --------------------------------------------------------------------------------------------


@dataclass
class GnsResult:
    tag: object
    n: int
    algebra: np.ndarray          # (D, N, N) Frobenius-orthonormal basis of the closure
    gram: np.ndarray             # Re rho(B_b^* B_a)
    gram_k: np.ndarray           # (m+1, D, D) components of rho(B_b^* B_a)
    quotient: np.ndarray         # (D, r): representatives, orthonormal for gram
    x: np.ndarray                # cyclic vector in quotient coordinates
    table: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.quotient.shape[1]

    def coords(self, A) -> np.ndarray:
        """Coordinates of ``A`` in the algebra basis; ``A`` must lie in the closure."""
        A = A.rep if isinstance(A, QuasilinearOp) else np.asarray(A, dtype=np.float64)
        c = np.einsum("aij,ij->a", self.algebra, A)
        back = np.einsum("a,aij->ij", c, self.algebra)
        if np.max(np.abs(back - A), initial=0.0) > 1e-8 * max(1.0, float(np.max(np.abs(A)))):
            raise InputError("operator is not in the generated algebra")
        return c

    def cls(self, A) -> np.ndarray:
        """Quotient coordinates of ``[A]``."""
        return self.quotient.T @ self.gram @ self.coords(A)

    def pi(self, A) -> np.ndarray:
        """``pi(A)`` as a real matrix on the quotient."""
        A = A.rep if isinstance(A, QuasilinearOp) else np.asarray(A, dtype=np.float64)
        self.coords(A)
        # (A B_a) in the algebra basis
        mult = np.einsum("bij,ik,akj->ba", self.algebra, A, self.algebra)
        return self.quotient.T @ self.gram @ mult @ self.quotient

    def k_form(self, u: np.ndarray, v: np.ndarray) -> Hypercomplex:
        """``<u, v> = rho(B^* A)`` for quotient vectors ``u = [A]``, ``v = [B]``."""
        a = self.quotient @ u
        b = self.quotient @ v
        return Hypercomplex(self.tag, np.einsum("a,pab,b->p", a, self.gram_k, b))

    def to_json(self) -> dict:
        return {"algebra": self.tag.kind, "n": self.n, "closure_dim": int(self.algebra.shape[0]),
                "quotient_dim": self.dim, "x": self.x.tolist(), "gram": self.gram.tolist(),
                "pi": {k: v.tolist() for k, v in self.table.items()}, "residuals": self.residuals}


def algebra_closure(generators: Sequence, cap: int = GNS_CAP, tol: float = 1e-10) -> np.ndarray:
    """Real span of all words in the generators, their adjoints and ``I``, as an orthonormal basis."""
    gens = [G.rep if isinstance(G, QuasilinearOp) else np.asarray(G, dtype=np.float64) for G in generators]
    if not gens:
        raise InputError("need at least one generator")
    N = gens[0].shape[0]
    letters = []
    for G in gens:
        letters.append(G)
        if np.max(np.abs(G - G.T)) > tol:
            letters.append(G.T)
    basis = np.zeros((0, N * N))
    queue = [np.eye(N)]

    def add(X) -> bool:
        nonlocal basis
        v = X.reshape(-1)
        s = max(1.0, float(np.linalg.norm(v)))
        for _ in range(2):
            v = v - basis.T @ (basis @ v)
        nv = np.linalg.norm(v)
        if nv <= tol * s:
            return False
        if basis.shape[0] >= cap:
            raise ClosureCapError(f"algebra closure exceeds dimension cap {cap}")
        basis = np.vstack([basis, v / nv])
        return True

    add(queue[0])
    for G in letters:
        if add(G):
            queue.append(G)
    i = 1
    while i < len(queue):
        X = queue[i]
        i += 1
        for G in letters:
            Y = G @ X
            if add(Y):
                queue.append(Y)
    return basis.reshape(-1, N, N)


def gns_build(generators: Sequence, rho: StateFunctional, cap: int = GNS_CAP,
              rng: np.random.Generator | None = None, checks: int = 8) -> GnsResult:
    """GNS representation of the algebra generated by ``generators`` for the state ``rho``."""
    if rho.kind == "weights":
        raise PreconditionError("GNS needs an operator functional")
    tag, n = rho.tag, rho.n
    gens = [G if isinstance(G, QuasilinearOp) else QuasilinearOp(tag, n, G) for G in generators]
    if tag.kind == "O":
        nontrivial = [G for G in gens if not np.allclose(G.rep, np.eye(G.N), atol=1e-12)]
        if len(nontrivial) > 1 or any(not G.selfadjoint for G in nontrivial):
            raise UnsupportedAlgebraError("octonion GNS supports the algebra of I and one selfadjoint element")
    B = algebra_closure(gens, cap)
    D = rho.density_components()
    # rho(X)_p = tr(X D_p); G_p[a, b] = rho(B_b^T B_a)_p
    BD = np.einsum("aij,pjk->paik", B, D)
    Gk = np.einsum("bji,paji->pab", B, BD)
    G = (Gk[0] + Gk[0].T) / 2
    lam, V = np.linalg.eigh(G)
    top = max(float(np.max(np.abs(lam))), 1e-300)
    if lam[0] < -1e-10 * max(1.0, top):
        raise SignedGramError(f"rho is not positive on the algebra (Gram eigenvalue {lam[0]:.3e})")
    keep = lam > 1e-10 * max(1.0, top)
    C = V[:, keep] / np.sqrt(lam[keep])
    res = GnsResult(tag, n, B, G, Gk, C, np.zeros(0))
    res.x = res.cls(np.eye(B.shape[1]))
    for k, Gop in enumerate(gens):
        res.table[str(k)] = res.pi(Gop)
    res.residuals = gns_residuals(res, rho, rng=rng, checks=checks)
    return res


def gns_residuals(res: GnsResult, rho: StateFunctional, rng: np.random.Generator | None = None,
                  checks: int = 8) -> dict:
    rng = rng if rng is not None else np.random.default_rng(0)
    D = res.algebra.shape[0]
    samples = [res.algebra[a] for a in range(D)]
    for _ in range(checks):
        samples.append(np.einsum("a,aij->ij", rng.standard_normal(D), res.algebra))
    repro = mult = star = contraction = 0.0
    pis = [res.pi(A) for A in samples]
    for A, pA in zip(samples, pis):
        lhs = rho(A)
        rhs = res.k_form(pA @ res.x, res.x)
        repro = max(repro, (lhs - rhs).norm())
        star = max(star, float(np.max(np.abs(res.pi(A.T) - pA.T), initial=0.0)))
        contraction = max(contraction, np.linalg.norm(pA, 2) - np.linalg.norm(A, 2))
    for _ in range(checks):
        a, b = rng.integers(len(samples), size=2)
        A, Bm = samples[a], samples[b]
        mult = max(mult, float(np.max(np.abs(res.pi(A @ Bm) - pis[a] @ pis[b]), initial=0.0)))
    # cyclicity: the classes of the basis span the quotient
    span = np.linalg.matrix_rank(res.quotient.T @ res.gram, tol=1e-8) if res.dim else 0
    return {"reproduction": float(repro), "multiplicative": float(mult), "adjoint": float(star),
            "contraction_excess": float(contraction), "x_norm": float(np.linalg.norm(res.x)),
            "cyclic": bool(span == res.dim), "gram_min": float(np.linalg.eigvalsh(res.gram)[0])}


@dataclass
class GnsEquivalence:
    U: np.ndarray
    isometry: float
    intertwining: float
    cyclic_residual: float


def gns_equivalence(res: GnsResult, rep: Callable[[np.ndarray], np.ndarray] | None = None,
                    x=None, atol: float = 1e-8) -> GnsEquivalence:
    """Isometry ``U`` with ``U pi_rho(A) x_rho = rep(A) x`` and ``U x_rho = x``.

    Default ``rep`` is the defining action on K^n; ``x`` is then a KVector.
    """
    concrete = rep is None
    if rep is None:
        rep = lambda A: A
    if x is None:
        raise InputError("cyclic vector x required")
    xk = x if isinstance(x, KVector) else None
    xv = x.flat if isinstance(x, KVector) else np.asarray(x, dtype=np.float64)
    D = res.algebra.shape[0]
    W, Q = [], []
    worst = 0.0
    for a in range(D):
        A = res.algebra[a]
        RA = np.asarray(rep(A), dtype=np.float64)
        w = RA @ xv
        W.append(w)
        Q.append(res.cls(A))
        if concrete and xk is not None:
            got = inner(xk, KVector(xk.tag, w))
            want = Hypercomplex(res.tag, np.einsum("pab,a,b->p", res.gram_k, res.coords(A), res.coords(np.eye(A.shape[0]))))
            worst = max(worst, (got - want).norm())
        else:
            worst = max(worst, abs(float(xv @ w) - float(res.gram[a] @ res.coords(np.eye(A.shape[0])))))
    if worst > atol:
        raise StateMismatchError(f"w_x o pi' differs from rho by {worst:.3e}")
    W = np.array(W).T
    Q = np.array(Q).T
    U = W @ np.linalg.pinv(Q)
    iso = float(np.max(np.abs(U.T @ U - np.eye(res.dim)), initial=0.0))
    inter = 0.0
    for a in range(D):
        A = res.algebra[a]
        inter = max(inter, float(np.linalg.norm(np.asarray(rep(A)) @ U - U @ res.pi(A), 2)))
    cyc = float(np.linalg.norm(U @ res.x - xv))
    return GnsEquivalence(U, iso, inter, cyc)


# -- interpolation ------------------------------------------------------------------------------------


def _check_orthonormal(xs: Sequence[KVector], atol: float = 1e-10) -> None:
    for a, x in enumerate(xs):
        for b, y in enumerate(xs):
            want = 1.0 if a == b else 0.0
            c = inner(x, y).coeffs.copy()
            c[0] -= want
            if np.max(np.abs(c)) > atol:
                raise NonOrthogonalError(f"vectors {a}, {b} are not K-orthonormal")


def interpolation_operator(xs: Sequence[KVector], zs: Sequence[KVector],
                           A: QuasilinearOp | None = None) -> QuasilinearOp:
    """``T(v) = sum_j z_j <x_j; v>`` with ``T x_j = z_j`` and ``||T|| <= sqrt(2n) max|z_j|``.

    With a selfadjoint ``A`` such that ``A x_j = z_j``, returns the selfadjoint
    ``F = T + T*(I - E)`` where ``E`` projects onto the span of the ``x_j``.
    """
    xs, zs = list(xs), list(zs)
    if not xs or len(xs) != len(zs):
        raise InputError("need equally many (and at least one) x and z vectors")
    _check_orthonormal(xs)
    tag, n = xs[0].tag, xs[0].n
    R = _gen_rights(tag, n)
    N = tag.dim * n
    T = np.zeros((N, N))
    for x, z in zip(xs, zs):
        xs[0]._check(z)
        # z <x; v> = sum_p (z i_p) ((x i_p) . v)
        T += np.einsum("pi,pj->ij", R @ z.flat, R @ x.flat)
    if A is None:
        return QuasilinearOp(tag, n, T)
    if not A.selfadjoint:
        raise PreconditionError("A must be selfadjoint")
    for x, z in zip(xs, zs):
        if np.max(np.abs(A.rep @ x.flat - z.flat)) > 1e-9 * max(1.0, A.norm()):
            raise PreconditionError("A x_j != z_j")
    S = right_span_basis(xs)
    E = S @ S.T
    return QuasilinearOp(tag, n, T + T.T @ (np.eye(N) - E))


def interpolation_bound(n: int, r: float) -> float:
    return float(np.sqrt(2 * n) * r)


def _complex_structure(J: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the ``+i`` eigenspace of a real ``J`` with ``J^2 = -I``."""
    N = J.shape[0]
    P = (np.eye(N) - 1j * J) / 2
    u, s, _ = np.linalg.svd(P)
    return u[:, : N // 2]


def _extend_onb(first: np.ndarray, second: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    cols = [first[:, k] for k in range(first.shape[1])]
    for v in second.T:
        w = v.copy()
        for _ in range(2):
            for c in cols:
                w = w - c * (np.vdot(c, w))
        nw = np.linalg.norm(w)
        if nw > tol:
            cols.append(w / nw)
    return np.column_stack(cols)


def unitary_interpolate(xs: Sequence[KVector], ys: Sequence[KVector], M: Hypercomplex) -> tuple[QuasilinearOp, QuasilinearOp]:
    """``(U, S)`` with ``U x_j = y_j``, ``U`` unitary and ``U = exp(S R_M)``, ``S`` selfadjoint.

    ``M`` acts by right multiplication, which preserves K-orthogonality; ``S`` commutes with ``R_M``.
    """
    _check_unit_imaginary(M)
    xs, ys = list(xs), list(ys)
    if len(xs) != len(ys) or not xs:
        raise InputError("need equally many (and at least one) x and y vectors")
    _check_orthonormal(xs)
    _check_orthonormal(ys)
    tag, n = xs[0].tag, xs[0].n
    J = scalar_block(tag, n, M, "right")
    Q = _complex_structure(J)
    # phi(v) = sqrt(2) Q^H v is an isometry taking R_M to multiplication by i
    a = np.sqrt(2) * Q.conj().T @ np.column_stack([x.flat for x in xs])
    b = np.sqrt(2) * Q.conj().T @ np.column_stack([y.flat for y in ys])
    Af = _extend_onb(a, b)
    Bf = _extend_onb(b, a)
    if Af.shape != Bf.shape:
        raise NonOrthogonalError("x and y families span subspaces of different dimension")
    k = Q.shape[1]
    W = np.eye(k) + Bf @ Af.conj().T - Af @ Af.conj().T
    T, Z = scipy.linalg.schur(W, output="complex")
    theta = np.angle(np.diag(T))
    H = (Z * theta) @ Z.conj().T
    H = (H + H.conj().T) / 2
    S = 2 * np.real(Q @ H @ Q.conj().T)
    U = 2 * np.real(Q @ W @ Q.conj().T)
    return QuasilinearOp(tag, n, U), QuasilinearOp(tag, n, (S + S.T) / 2)


def exp_right(S: QuasilinearOp, M: Hypercomplex, t: float = 1.0) -> QuasilinearOp:
    """``exp(t S R_M)`` for ``S`` commuting with right multiplication by ``M``."""
    _check_unit_imaginary(M)
    J = scalar_block(S.tag, S.n, M, "right")
    return QuasilinearOp(S.tag, S.n, scipy.linalg.expm(t * (J @ S.rep)))


# -- finite K-valued measures ---------------------------------------------------------------------------


class KMeasure:
    """Weights ``mu[point, v, l]``; ``mu^(f) = sum f_v(point) i_l mu_{v,l}(point)``."""

    __slots__ = ("tag", "points", "mu")

    def __init__(self, tag, points: Sequence, mu):
        self.tag = as_tag(tag)
        self.points = tuple(points)
        mu = np.array(mu, dtype=np.float64)
        d = self.tag.dim
        if mu.shape != (len(self.points), d, d):
            raise InputError(f"mu must have shape ({len(self.points)}, {d}, {d})")
        if not np.all(np.isfinite(mu)):
            raise InputError("measure weights must be finite")
        mu.setflags(write=False)
        self.mu = mu

    def index(self, pt) -> int:
        try:
            return self.points.index(pt)
        except ValueError:
            raise InputError(f"{pt!r} is not a sample point") from None

    def of_point(self, pt) -> Hypercomplex:
        """``mu^(chi_{pt})``."""
        return Hypercomplex(self.tag, self.mu[self.index(pt), 0])

    def of_set(self, subset) -> Hypercomplex:
        idx = [self.index(p) for p in subset]
        return Hypercomplex(self.tag, self.mu[idx, 0].sum(axis=0) if idx else np.zeros(self.tag.dim))

    def to_json(self) -> dict:
        return {"algebra": self.tag.kind, "points": list(self.points), "mu": self.mu.tolist()}

    @classmethod
    def from_json(cls, obj) -> "KMeasure":
        try:
            return cls(obj.get("algebra", "H"), obj["points"], obj["mu"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed measure JSON: {exc}") from exc

    @classmethod
    def unit_mass(cls, tag, points: Sequence, at) -> "KMeasure":
        """Real unit mass at ``at``: ``mu_{v,l} = delta_{vl}`` there, so ``mu^(f) = f(at)``."""
        tag = as_tag(tag)
        points = tuple(points)
        mu = np.zeros((len(points), tag.dim, tag.dim))
        if at not in points:
            raise InputError(f"{at!r} is not a sample point")
        mu[points.index(at)] = np.eye(tag.dim)
        return cls(tag, points, mu)

    @classmethod
    def with_density(cls, mu: "KMeasure", f) -> "KMeasure":
        """``lambda`` with ``lambda^(g chi_U) = mu^(g f chi_U)`` for constant ``g``."""
        tag = mu.tag
        f = function_table(tag, mu.points, f)
        from .kernels import mul_batch
        d = tag.dim
        lam = np.zeros_like(mu.mu)
        for v in range(d):
            g = np.broadcast_to(np.eye(d)[v], f.shape)
            gf = mul_batch(g, f, tag.idx, tag.sgn)
            lam[:, v, :] = np.einsum("pw,pwl->pl", gf, mu.mu)
        return cls(tag, mu.points, lam)


def kmeasure_integrate(mu: KMeasure, f) -> Hypercomplex:
    f = function_table(mu.tag, mu.points, f)
    return Hypercomplex(mu.tag, np.einsum("pv,pvl->l", f, mu.mu))


def variation(mu: KMeasure, subset=None) -> float:
    """Sum of ``|mu^(chi_{pt})|`` over the subset; the finest partition attains the sup."""
    idx = range(len(mu.points)) if subset is None else [mu.index(p) for p in subset]
    return float(sum(np.linalg.norm(mu.mu[i, 0]) for i in idx))


def sup_set_value(mu: KMeasure, max_exhaustive: int = 16, rng: np.random.Generator | None = None,
                  samples: int = 4096) -> float:
    """``sup_U |mu^(chi_U)|``, exhaustive for small point sets."""
    P = len(mu.points)
    rows = mu.mu[:, 0]
    if P <= max_exhaustive:
        masks = np.array(list(itertools.product((0.0, 1.0), repeat=P)))
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        masks = rng.integers(0, 2, size=(samples, P)).astype(float)
    return float(np.max(np.linalg.norm(masks @ rows, axis=1)))


def radon_nikodym(lam: KMeasure, mu: KMeasure, atol: float = 1e-11) -> np.ndarray:
    """Density table ``f`` with ``lambda^(chi_U) = mu^(f chi_U)``, solved point by point."""
    if lam.points != mu.points or lam.tag != mu.tag:
        raise InputError("measures on different point sets or algebras")
    d = mu.tag.dim
    f = np.zeros((len(mu.points), d))
    for k, pt in enumerate(mu.points):
        A = mu.mu[k].T          # column v: coefficients of i_l mu_{v,l}
        target = lam.mu[k, 0]
        sol, *_ = np.linalg.lstsq(A, target, rcond=None)
        scale = max(1.0, float(np.linalg.norm(target)))
        if np.linalg.norm(A @ sol - target) > 1e-9 * scale:
            raise AbsoluteContinuityError(pt)
        f[k] = sol
    for k, pt in enumerate(mu.points):
        got = mu.mu[k].T @ f[k]
        if np.max(np.abs(got - lam.mu[k, 0])) > atol * max(1.0, float(np.max(np.abs(lam.mu[k, 0])))):
            raise AbsoluteContinuityError(pt, f"density check failed at {pt!r}")
    return f
