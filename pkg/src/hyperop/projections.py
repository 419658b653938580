"""Graded projections and their lattice.

A graded projection is the orthogonal projection ``P`` of the real space onto a
subspace that is closed under right multiplication by every generator.  Its
grading components are ``E_s = P R_{conj(s)}``; see :meth:`GradedProjection.grading`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import Hypercomplex, as_tag
from .errors import InputError, NonOrthogonalError, PreconditionError
from .kmodule import KVector, gram_schmidt_k, right_span_columns
from .operators import QuasilinearOp, scalar_block

RANK_RTOL = 1e-10
SAT_TOL = 1e-9


class RankAmbiguityWarning(UserWarning):
    """Singular values sit within a factor of 10 of the rank threshold."""


def _orthonormal_columns(a: np.ndarray, tol: float = SAT_TOL) -> np.ndarray:
    if a.size == 0 or a.shape[1] == 0:
        return np.zeros((a.shape[0], 0))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0:
        return u[:, :0]
    return u[:, s > tol * s[0]]


def saturate(tag, n: int, V: np.ndarray) -> np.ndarray:
    """Smallest subspace containing ``range(V)`` and closed under all ``R_{i_p}``.

    Iterates multiply-by-generators and re-orthonormalise until the dimension is
    stable (one round suffices for ranges of right-linear maps over H).
    """
    tag = as_tag(tag)
    V = _orthonormal_columns(V)
    if V.shape[1] == 0:
        return V
    R = [scalar_block(tag, n, Hypercomplex.generator(tag, p), "right") for p in range(1, tag.dim)]
    while True:
        W = _orthonormal_columns(np.column_stack([V] + [r @ V for r in R]))
        if W.shape[1] == V.shape[1]:
            return W
        V = W


def _k_basis(tag, n: int, V: np.ndarray) -> list[KVector]:
    """K-orthonormal vectors whose right spans exactly fill the saturated subspace ``range(V)``."""
    tag = as_tag(tag)
    d = tag.dim
    k = V.shape[1] // d
    if k == 0:
        return []
    P = V @ V.T
    if tag.kind == "O":
        # Saturated subspaces of O^n are O (x) Y_0; a real basis of Y_0 works.
        w, U = np.linalg.eigh(P[0::d, 0::d])
        cols = U[:, w > 0.5]
        out = []
        for c in cols.T:
            data = np.zeros((n, d))
            data[:, 0] = c
            out.append(KVector(tag, data))
        return out
    out: list[KVector] = []
    span = np.zeros((V.shape[0], 0))
    for c in V.T:
        if len(out) == k:
            break
        v = c - span @ (span.T @ c)
        v = v - span @ (span.T @ v)
        nrm = np.linalg.norm(v)
        if nrm < 1e-6:
            continue
        q = KVector(tag, v / nrm)
        out.append(q)
        span = _orthonormal_columns(np.column_stack([span, right_span_columns([q])]))
    return out


class GradedProjection:
    """Orthogonal projection onto a right-generator-closed subspace, with its K-basis."""

    __slots__ = ("tag", "n", "op", "basis", "_V")

    def __init__(self, tag, n: int, V: np.ndarray, basis: Sequence[KVector] | None = None):
        tag = as_tag(tag)
        self.tag = tag
        self.n = int(n)
        V = np.asarray(V, dtype=np.float64).reshape(tag.dim * self.n, -1)
        self._V = V
        self.op = QuasilinearOp(tag, n, V @ V.T)
        self.basis = list(basis) if basis is not None else _k_basis(tag, self.n, V)

    # -- constructors ------------------------------------------------------------

    @classmethod
    def from_real_subspace(cls, tag, n: int, A: np.ndarray) -> "GradedProjection":
        """Projection onto the saturation of ``range(A)``."""
        return cls(tag, n, saturate(tag, n, np.asarray(A, dtype=np.float64)))

    @classmethod
    def zero(cls, tag, n: int) -> "GradedProjection":
        tag = as_tag(tag)
        return cls(tag, n, np.zeros((tag.dim * n, 0)), [])

    @classmethod
    def identity(cls, tag, n: int) -> "GradedProjection":
        tag = as_tag(tag)
        return cls(tag, n, np.eye(tag.dim * n))

    # -- data ----------------------------------------------------------------------

    @property
    def rank_real(self) -> int:
        return self._V.shape[1]

    @property
    def rank(self) -> int:
        """Dimension over K."""
        return self._V.shape[1] // self.tag.dim

    @property
    def columns(self) -> np.ndarray:
        """Real orthonormal basis of the range, as columns."""
        return self._V

    def __call__(self, x: KVector) -> KVector:
        return self.op.apply(x)

    def grading(self, p: int) -> QuasilinearOp:
        """``E_{i_p} = P R_{conj(i_p)}``: ``E_1 = P`` and the ``E_s`` multiply like the generators."""
        s = Hypercomplex.generator(self.tag, p).conj()
        return QuasilinearOp(self.tag, self.n, self.op.rep @ scalar_block(self.tag, self.n, s, "right"))

    def reconstruct(self, x: KVector) -> KVector:
        """``sum_a y_a <y_a; x>`` over the stored K-orthonormal basis."""
        from .kmodule import k_project

        return k_project(self.basis, x)

    def _check(self, other: "GradedProjection") -> None:
        if other.tag != self.tag or other.n != self.n:
            raise InputError("projections on different spaces")

    def __repr__(self):
        return f"GradedProjection[{self.tag.kind}](n={self.n}, rank={self.rank})"

    # -- invariants ------------------------------------------------------------------

    def invariant_residuals(self) -> dict:
        P = self.op.rep
        d, n = self.tag.dim, self.n
        res = {
            "idempotent": float(np.max(np.abs(P @ P - P), initial=0.0)),
            "selfadjoint": float(np.max(np.abs(P - P.T), initial=0.0)),
        }
        rl = 0.0
        for p in range(1, d):
            R = scalar_block(self.tag, n, Hypercomplex.generator(self.tag, p), "right")
            rl = max(rl, float(np.max(np.abs(P @ R - R @ P), initial=0.0)))
        res["right_linear"] = rl
        # range equals the right span of the stored basis
        span = _orthonormal_columns(right_span_columns(self.basis)) if self.basis else np.zeros((d * n, 0))
        res["basis_span"] = float(np.max(np.abs(span @ span.T - P), initial=0.0)) if span.shape[1] == self.rank_real else float("inf")
        # (6) E_s E_q = E_{sq} on the real part X_0, for generator pairs
        tag = self.tag
        x0 = np.zeros((d * n, n))
        x0[0::d, :] = np.eye(n)
        E = [self.grading(p).rep for p in range(d)]
        g6 = 0.0
        for s in range(d):
            for q in range(d):
                r, sg = int(tag.idx[s, q]), float(tag.sgn[s, q])
                g6 = max(g6, float(np.max(np.abs(E[s] @ E[q] @ x0 - sg * E[r] @ x0), initial=0.0)))
        res["grading_mult"] = g6
        # (7) E_1 selfadjoint, E_s skew for imaginary s
        g7 = float(np.max(np.abs(E[0].T - E[0]), initial=0.0))
        for s in range(1, d):
            g7 = max(g7, float(np.max(np.abs(E[s].T + E[s]), initial=0.0)))
        res["grading_adjoint"] = g7
        res["norm_one"] = abs(float(np.linalg.norm(P, 2)) - 1.0) if self.rank_real else 0.0
        return res

    def check_invariants(self, atol: float = 1e-10) -> bool:
        return all(v <= atol for v in self.invariant_residuals().values())

    def to_json(self) -> dict:
        out = self.op.to_json()
        out["basis"] = [b.to_json() for b in self.basis]
        return out


# -- constructions -----------------------------------------------------------------


def projection_onto(basis: Sequence[KVector]) -> GradedProjection:
    """Orthogonal projection onto the K-span of ``basis`` (independence is checked)."""
    basis = list(basis)
    if not basis:
        raise InputError("empty basis: use GradedProjection.zero")
    tag, n = basis[0].tag, basis[0].n
    q = gram_schmidt_k(basis, RANK_RTOL)
    V = saturate(tag, n, right_span_columns(q))
    if tag.kind == "H" and V.shape[1] == len(q) * tag.dim:
        return GradedProjection(tag, n, V, q)
    return GradedProjection(tag, n, V)


def _rank_split(rep: np.ndarray, rtol: float = RANK_RTOL):
    u, s, vt = np.linalg.svd(rep)
    smax = s[0] if s.size else 0.0
    thr = rtol * smax
    if smax > 0 and np.any((s > thr / 10) & (s < thr * 10)):
        warnings.warn("singular values straddle the rank threshold", RankAmbiguityWarning, stacklevel=3)
    r = int(np.sum(s > thr)) if smax > 0 else 0
    return u[:, :r], vt[r:].T


def _require_right_linear(T: QuasilinearOp) -> None:
    if not T.right_linear:
        raise PreconditionError("operator must be right-linear")


def range_projection(T: QuasilinearOp) -> GradedProjection:
    _require_right_linear(T)
    U, _ = _rank_split(T.rep)
    return GradedProjection.from_real_subspace(T.tag, T.n, U)


def kernel_projection(T: QuasilinearOp) -> GradedProjection:
    _require_right_linear(T)
    _, Vn = _rank_split(T.rep)
    return GradedProjection.from_real_subspace(T.tag, T.n, Vn)


def complement(E: GradedProjection) -> GradedProjection:
    N = E.tag.dim * E.n
    Q = np.eye(N) - E.op.rep
    w, U = np.linalg.eigh((Q + Q.T) / 2)
    return GradedProjection.from_real_subspace(E.tag, E.n, U[:, w > 0.5])


def join(E: GradedProjection, F: GradedProjection) -> GradedProjection:
    E._check(F)
    return range_projection(E.op + F.op)


def meet(E: GradedProjection, F: GradedProjection) -> GradedProjection:
    E._check(F)
    return complement(join(complement(E), complement(F)))


def difference(F: GradedProjection, E: GradedProjection) -> GradedProjection:
    """``F - E`` for ``E <= F``, rebuilt as a projection onto the range of ``F - E``."""
    F._check(E)
    D = F.op - E.op
    w, U = np.linalg.eigh((D.rep + D.rep.T) / 2)
    return GradedProjection.from_real_subspace(F.tag, F.n, U[:, w > 0.5])


@dataclass
class OrderingReport:
    inclusion: bool
    products: bool
    norms: bool
    forms: bool
    residuals: dict = field(default_factory=dict)

    @property
    def agree(self) -> bool:
        return len({self.inclusion, self.products, self.norms, self.forms}) == 1

    @property
    def holds(self) -> bool:
        return self.agree and self.inclusion


def ordering_check(E: GradedProjection, F: GradedProjection, samples: int = 64, seed: int = 0,
                   atol: float = 1e-10) -> OrderingReport:
    """Evaluate the four equivalent forms of ``E <= F`` independently."""
    E._check(F)
    Pe, Pf = E.op.rep, F.op.rep
    N = Pe.shape[0]
    incl = float(np.max(np.abs(Pf @ E.columns - E.columns), initial=0.0))
    prod = max(float(np.max(np.abs(Pf @ Pe - Pe), initial=0.0)), float(np.max(np.abs(Pe @ Pf - Pe), initial=0.0)))
    rng = np.random.default_rng(seed)
    xs = rng.standard_normal((N, samples))
    # the direction where F - E is most negative is the sharpest probe
    w, U = np.linalg.eigh(Pf - Pe)
    xs = np.column_stack([xs, U[:, 0]])
    gap = float(np.min(np.linalg.norm(Pf @ xs, axis=0) - np.linalg.norm(Pe @ xs, axis=0)))
    return OrderingReport(
        inclusion=incl <= 1e-9,
        products=prod <= atol,
        norms=gap >= -1e-9,
        forms=float(w[0]) >= -atol,
        residuals={"inclusion": incl, "products": prod, "norm_gap": gap, "min_eig": float(w[0])},
    )


@dataclass
class PowerLimitResult:
    projection: GradedProjection
    approximant: QuasilinearOp
    distance: float
    bound: float
    monotone: bool
    lambda_min: float
    steps: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.monotone and self.distance <= self.bound


def power_limit_projection(A: QuasilinearOp, n_max: int = 1024) -> PowerLimitResult:
    """Follow ``A^{1/n}`` for ``n = 1, 2, 4, ..., n_max`` toward the range projection of ``A``."""
    from .spectral import spectral_decomposition, spectral_integral

    if n_max < 1 or (n_max & (n_max - 1)):
        raise InputError("n_max must be a power of two")
    if not (A.selfadjoint and A.right_linear):
        raise PreconditionError("A must be selfadjoint and right-linear")
    dec = spectral_decomposition(A)
    lam = np.array([l for l, _ in dec.pairs])
    if lam.size and (lam.min() < -1e-10 or lam.max() > 1 + 1e-10):
        raise PreconditionError("need 0 <= A <= I")
    thr = RANK_RTOL * max(1.0, A.norm())
    nz = lam[lam > thr]
    lam_min = float(nz.min()) if nz.size else 1.0
    if lam_min < 1e-3:
        warnings.warn(f"smallest nonzero eigenvalue {lam_min:.2e} < 1e-3; slow convergence", RuntimeWarning, stacklevel=2)
    target = range_projection(A)
    steps = []
    prev = None
    monotone = True
    n = 1
    cur = None
    while n <= n_max:
        p = 1.0 / n
        cur = spectral_integral(dec, lambda t, p=p: max(t, 0.0) ** p if t > thr else 0.0)
        dist = float(np.linalg.norm(cur.rep - target.op.rep, 2))
        if prev is not None:
            mineig = float(np.linalg.eigvalsh((cur.rep - prev.rep + (cur.rep - prev.rep).T) / 2)[0])
            monotone &= mineig >= -1e-10
        steps.append((n, dist))
        prev = cur
        n *= 2
    bound = abs(np.log(lam_min)) / n_max + 1e-9
    return PowerLimitResult(target, cur, steps[-1][1], bound, monotone, lam_min, steps)


def orthogonal_family_sum(projections: Sequence[GradedProjection], tag=None, n: int | None = None,
                          atol: float = 1e-10) -> GradedProjection:
    projections = list(projections)
    if not projections:
        if tag is None or n is None:
            raise InputError("empty family needs tag and n")
        return GradedProjection.zero(tag, n)
    first = projections[0]
    for a, Ea in enumerate(projections):
        first._check(Ea)
        for Ec in projections[a + 1:]:
            r = float(np.max(np.abs(Ea.op.rep @ Ec.op.rep), initial=0.0))
            if r > atol:
                raise NonOrthogonalError(f"projections not orthogonal (|E_a E_c| = {r:.2e})")
    cols = np.column_stack([E.columns for E in projections])
    basis = [b for E in projections for b in E.basis]
    return GradedProjection(first.tag, first.n, cols, basis)
