"""Resolvents, spectra, spectral radius and finite spectral decompositions.

The spectrum uses left scalars: ``z`` is in the spectrum when
``blockdiag(L_z) - T`` is singular on the real space.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .algebra import Hypercomplex, _check_unit_imaginary
from .errors import DivergenceRiskError, InputError, PreconditionError, SpectrumHitError
from .operators import QuasilinearOp, scalar_block
from .projections import GradedProjection

SINGULAR_RTOL = 1e-12
CLUSTER_RTOL = 1e-9


class ClusterAmbiguityWarning(UserWarning):
    pass


# -- resolvents ----------------------------------------------------------------------


def shifted(T: QuasilinearOp, z: Hypercomplex) -> np.ndarray:
    """Real matrix of ``zI - T``."""
    if z.tag != T.tag:
        raise InputError("scalar and operator from different algebras")
    return scalar_block(T.tag, T.n, z, "left") - T.rep


def sigma_min(T: QuasilinearOp, z: Hypercomplex) -> float:
    return float(np.linalg.svd(shifted(T, z), compute_uv=False)[-1])


def resolvent(T: QuasilinearOp, z: Hypercomplex) -> QuasilinearOp:
    """``R(z; T) = (zI - T)^{-1}``; raises :class:`SpectrumHitError` on numerical singularity."""
    A = shifted(T, z)
    s = np.linalg.svd(A, compute_uv=False)
    scale = float(s[0]) if s.size else 0.0
    if s.size == 0 or s[-1] < SINGULAR_RTOL * max(scale, 1e-300):
        raise SpectrumHitError(z.coeffs.tolist(), float(s[-1]) if s.size else 0.0, scale)
    return QuasilinearOp(T.tag, T.n, np.linalg.solve(A, np.eye(A.shape[0])))


@dataclass
class NeumannResult:
    op: QuasilinearOp
    tail_bound: float
    ratio: float
    terms: int


def neumann_resolvent(T: QuasilinearOp, z0: Hypercomplex, z: Hypercomplex, terms: int = 60) -> NeumannResult:
    """Partial sum of ``(sum_n [R(z0) (z0 - z)]^n) R(z0)`` with its geometric tail bound."""
    if terms < 1:
        raise InputError("terms must be >= 1")
    R0 = resolvent(T, z0)
    nr0 = R0.norm()
    q = nr0 * (z0 - z).norm()
    if q >= 1.0:
        raise DivergenceRiskError(f"||R(z0)|| |z0 - z| = {q:.3g} >= 1")
    K = R0.rep @ scalar_block(T.tag, T.n, z0 - z, "left")
    acc = np.eye(K.shape[0])
    term = np.eye(K.shape[0])
    for _ in range(terms - 1):
        term = term @ K
        acc = acc + term
    tail = nr0 * q ** terms / (1.0 - q)
    return NeumannResult(QuasilinearOp(T.tag, T.n, acc @ R0.rep), tail, q, terms)


# -- spectra -----------------------------------------------------------------------------


@dataclass
class SpectrumEstimate:
    points: list
    method: str
    tolerance: float
    slice: Hypercomplex | None = None
    multiplicities: list = field(default_factory=list)
    norm: float | None = None
    sigma: list = field(default_factory=list)

    def as_array(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, 0))
        return np.stack([p.coeffs for p in self.points])

    def to_json(self) -> dict:
        out = {
            "method": self.method,
            "tolerance": self.tolerance,
            "points": [p.coeffs.tolist() for p in self.points],
        }
        if self.points:
            out["algebra"] = self.points[0].tag.kind
        if self.multiplicities:
            out["multiplicities"] = [int(k) for k in self.multiplicities]
        if self.slice is not None:
            out["slice"] = self.slice.to_json()
        if self.norm is not None:
            out["norm"] = self.norm
        return out


def _cluster_1d(vals: np.ndarray, tol: float) -> list[list[int]]:
    order = np.argsort(vals, kind="stable")
    clusters: list[list[int]] = []
    for i in order:
        if clusters and vals[i] - vals[clusters[-1][-1]] <= tol:
            clusters[-1].append(int(i))
        else:
            clusters.append([int(i)])
    return clusters


def _require_selfadjoint(T: QuasilinearOp) -> None:
    if not T.selfadjoint:
        raise PreconditionError("operator must be selfadjoint")


def spectrum_selfadjoint(T: QuasilinearOp) -> SpectrumEstimate:
    _require_selfadjoint(T)
    w = np.linalg.eigvalsh((T.rep + T.rep.T) / 2.0)
    tol = CLUSTER_RTOL * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    clusters = _cluster_1d(w, tol)
    pts = [Hypercomplex.real(T.tag, float(np.mean(w[c]))) for c in clusters]
    return SpectrumEstimate(pts, "selfadjoint-exact", tol, multiplicities=[len(c) // T.tag.dim for c in clusters])


def left_diagonal_op(bs: Sequence[Hypercomplex]) -> QuasilinearOp:
    """``x -> (b_1 x_1, ..., b_n x_n)``."""
    bs = list(bs)
    if not bs:
        raise InputError("empty diagonal")
    tag = bs[0].tag
    from .kernels import left_mats

    mats = left_mats(np.stack([b.coeffs for b in bs]), tag.idx, tag.sgn)
    d = tag.dim
    rep = np.zeros((d * len(bs), d * len(bs)))
    for l, m in enumerate(mats):
        rep[l * d:(l + 1) * d, l * d:(l + 1) * d] = m
    return QuasilinearOp(tag, len(bs), rep)


def spectrum_left_diagonal(bs: Sequence[Hypercomplex], tol: float = 0.0) -> SpectrumEstimate:
    """Exact spectrum ``{b_n}`` and norm ``max |b_n|`` of a left-diagonal operator."""
    bs = list(bs)
    op = left_diagonal_op(bs)
    pts: list[Hypercomplex] = []
    mult: list[int] = []
    for b in bs:
        for i, p in enumerate(pts):
            if float(np.max(np.abs(p.coeffs - b.coeffs))) <= tol:
                mult[i] += 1
                break
        else:
            pts.append(b)
            mult.append(1)
    nrm = max(b.norm() for b in bs)
    return SpectrumEstimate(pts, "diagonal-exact", tol, multiplicities=mult, norm=nrm,
                            sigma=[float(op.norm())])


def spectrum_scan(T: QuasilinearOp, M: Hypercomplex, window=(-2.0, 2.0, -2.0, 2.0), grid: int = 101,
                  refine_tol: float = 1e-7) -> SpectrumEstimate:
    """Zeros of ``z -> sigma_min(zI - T)`` on the slice ``{x + y M}``.

    Since ``sigma_min`` is 1-Lipschitz in ``z``, every spectrum point inside the
    window has a grid node within half a cell diagonal whose value is below
    that distance; those nodes seed a local refinement.
    """
    _check_unit_imaginary(M)
    if M.tag != T.tag:
        raise InputError("slice axis and operator from different algebras")
    x0, x1, y0, y1 = (float(v) for v in window)
    if not (x1 > x0 and y1 >= y0):
        raise InputError("empty window")
    if grid < 2:
        raise InputError("grid must have at least 2 nodes per side")
    xs = np.linspace(x0, x1, grid)
    ys = np.linspace(y0, y1, grid) if y1 > y0 else np.array([y0])
    hx = xs[1] - xs[0]
    hy = ys[1] - ys[0] if ys.size > 1 else 0.0
    thresh = 0.5 * math.hypot(hx, hy) * (1 + 1e-9)
    tag, n = T.tag, T.n
    L1 = scalar_block(tag, n, Hypercomplex.real(tag, 1.0))
    LM = scalar_block(tag, n, M)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    stackA = X[..., None, None] * L1 + Y[..., None, None] * LM - T.rep
    smin = np.linalg.svd(stackA.reshape(-1, T.N, T.N), compute_uv=False)[:, -1].reshape(X.shape)
    cand = []
    gx, gy = smin.shape
    for a in range(gx):
        for b in range(gy):
            v = smin[a, b]
            if v > thresh:
                continue
            nb = smin[max(a - 1, 0):a + 2, max(b - 1, 0):b + 2]
            if v <= nb.min():
                cand.append((a, b))

    def f(p):
        z = Hypercomplex(tag, p[0] * np.eye(tag.dim)[0] + p[1] * M.coeffs)
        return sigma_min(T, z)

    scale = max(1.0, T.norm())
    found: list[tuple[float, float, float]] = []
    for a, b in cand:
        r = minimize(f, np.array([xs[a], ys[b]]), method="Nelder-Mead",
                     options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
        if r.fun > refine_tol * scale:
            continue
        px, py = float(r.x[0]), float(r.x[1])
        if any(math.hypot(px - qx, py - qy) <= max(hx, hy, 1e-9) for qx, qy, _ in found):
            continue
        found.append((px, py, float(r.fun)))
    found.sort()
    pts = [Hypercomplex(tag, px * np.eye(tag.dim)[0] + py * M.coeffs) for px, py, _ in found]
    return SpectrumEstimate(pts, "slice-scan", max(hx, hy), slice=M, sigma=[s for *_, s in found])


# -- spectral radius -----------------------------------------------------------------------


@dataclass
class RadiusEstimate:
    value: float
    converged: bool
    doublings: int
    history: list = field(default_factory=list)

    def __float__(self):
        return self.value


def spectral_radius(T: QuasilinearOp, max_doublings: int = 12, rtol: float = 1e-4) -> RadiusEstimate:
    """``||T^{2^k}||^{2^{-k}}`` by normalised repeated squaring in the log domain."""
    nrm = T.norm()
    if nrm == 0.0:
        return RadiusEstimate(0.0, True, 0, [0.0])
    C = T.rep / nrm
    logn = math.log(nrm)  # log ||T^{2^k}||
    hist = [nrm]
    for k in range(1, max_doublings + 1):
        C = C @ C
        c = float(np.linalg.norm(C, 2))
        if c == 0.0:
            hist.append(0.0)
            return RadiusEstimate(0.0, True, k, hist)
        C = C / c
        logn = 2.0 * logn + math.log(c)
        est = math.exp(logn / 2.0 ** k)
        prev = hist[-1]
        hist.append(est)
        if abs(est - prev) <= rtol * max(prev, 1e-300):
            return RadiusEstimate(est, True, k, hist)
    return RadiusEstimate(hist[-1], False, max_doublings, hist)


# -- spectral decomposition -----------------------------------------------------------------


@dataclass
class SpectralDecomposition:
    pairs: list
    tag: object
    n: int
    source_hash: str
    tolerance: float

    @property
    def eigenvalues(self) -> list[float]:
        return [l for l, _ in self.pairs]

    def reconstruct(self) -> QuasilinearOp:
        rep = sum((l * P.op.rep for l, P in self.pairs), np.zeros((self.tag.dim * self.n,) * 2))
        return QuasilinearOp(self.tag, self.n, rep)

    def residuals(self, T: QuasilinearOp | None = None) -> dict:
        N = self.tag.dim * self.n
        S = sum((P.op.rep for _, P in self.pairs), np.zeros((N, N)))
        cross = 0.0
        for a, (_, Pa) in enumerate(self.pairs):
            for _, Pc in self.pairs[a + 1:]:
                cross = max(cross, float(np.max(np.abs(Pa.op.rep @ Pc.op.rep))))
        out = {"partition": float(np.max(np.abs(S - np.eye(N)))), "orthogonal": cross}
        if T is not None:
            out["reconstruction"] = float(np.linalg.norm(self.reconstruct().rep - T.rep, 2))
        return out


def op_hash(T: QuasilinearOp) -> str:
    return hashlib.sha1(np.ascontiguousarray(T.rep).tobytes()).hexdigest()[:16]


def spectral_decomposition(T: QuasilinearOp) -> SpectralDecomposition:
    """Eigen-clusters of a selfadjoint right-linear operator with their graded projections."""
    _require_selfadjoint(T)
    if not T.right_linear:
        raise PreconditionError("spectral decomposition needs a right-linear operator")
    S = (T.rep + T.rep.T) / 2.0
    w, U = np.linalg.eigh(S)
    tol = CLUSTER_RTOL * max(T.norm(), 1e-300)
    clusters = _cluster_1d(w, tol)
    for a in range(len(clusters) - 1):
        gap = w[clusters[a + 1][0]] - w[clusters[a][-1]]
        if gap < 10 * tol:
            warnings.warn(f"eigenvalue clusters separated by only {gap:.2e}", ClusterAmbiguityWarning, stacklevel=2)
    pairs = []
    for c in clusters:
        lam = float(np.mean(w[c]))
        pairs.append((lam, GradedProjection(T.tag, T.n, U[:, c])))
    return SpectralDecomposition(pairs, T.tag, T.n, op_hash(T), tol)


def _eval_f(f: Callable, lam: float, tag) -> Hypercomplex | float:
    try:
        v = f(lam)
    except (ValueError, ZeroDivisionError, ArithmeticError) as exc:
        raise InputError(f"f undefined at eigenvalue {lam!r}: {exc}") from exc
    if isinstance(v, Hypercomplex):
        if not np.all(np.isfinite(v.coeffs)):
            raise InputError(f"f not finite at {lam!r}")
        return v
    v = float(v)
    if not math.isfinite(v):
        raise InputError(f"f not finite at {lam!r}")
    return v


def spectral_integral(dec: SpectralDecomposition, f: Callable) -> QuasilinearOp:
    """``sum_k f(lambda_k) P_k`` with hypercomplex values acting by left multiplication."""
    N = dec.tag.dim * dec.n
    rep = np.zeros((N, N))
    for lam, P in dec.pairs:
        v = _eval_f(f, lam, dec.tag)
        if isinstance(v, Hypercomplex):
            rep += scalar_block(dec.tag, dec.n, v, "left") @ P.op.rep
        else:
            rep += v * P.op.rep
    return QuasilinearOp(dec.tag, dec.n, rep)


def slice_compatible(T: QuasilinearOp, M: Hypercomplex, atol: float = 1e-10) -> bool:
    """``T`` commutes with left multiplication by ``M`` (entries in the plane ``R + M R``)."""
    LM = scalar_block(T.tag, T.n, M, "left")
    return float(np.max(np.abs(LM @ T.rep - T.rep @ LM), initial=0.0)) <= atol * max(1.0, T.norm())
