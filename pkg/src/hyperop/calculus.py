"""Functional calculi and the operator constructions built on them.

Hypercomplex function values act by left multiplication, matching ``zI``.
For a K-valued function the left calculus only behaves like a calculus when
``T`` commutes with the left multiplications involved (for a value in the
plane ``R + M R``: when ``T`` has entries in that plane).  Those operations
emit :class:`SliceWarning` otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import Hypercomplex, _check_unit_imaginary, as_tag, mul
from .errors import (
    ContourPlacementError,
    DomainError,
    InputError,
    NotPositiveError,
    PreconditionError,
    SpectrumHitError,
)
from .operators import (
    QuasilinearOp,
    adjoint,
    component_matrices,
    compose,
    identity,
    left_scalar_op,
    scalar_block,
)
from .spectral import (
    resolvent,
    slice_compatible,
    spectral_decomposition,
    spectral_integral,
    spectrum_selfadjoint,
)


class SliceWarning(UserWarning):
    """A K-valued left calculus was applied to an operator that does not commute with the slice."""


def _warn_slice(T: QuasilinearOp, M: Hypercomplex, what: str) -> None:
    if not slice_compatible(T, M):
        warnings.warn(f"{what}: operator does not commute with left multiplication by M; "
                      "unitarity and calculus laws are not guaranteed", SliceWarning, stacklevel=3)


def _require_sa_rl(T: QuasilinearOp) -> None:
    if not T.selfadjoint:
        raise PreconditionError("operator must be selfadjoint")
    if not T.right_linear:
        raise PreconditionError("operator must be right-linear")


# -- polynomials -----------------------------------------------------------------------


@dataclass(frozen=True)
class PolySpec:
    """``sum_k b_{k,1} z^{k_1} b_{k,2} z^{k_2} ...``, products associated left to right.

    ``terms`` holds ``(coeffs, exps)`` pairs of equal length.
    """

    tag: object
    terms: tuple

    def __post_init__(self):
        tag = as_tag(self.tag)
        object.__setattr__(self, "tag", tag)
        norm_terms = []
        for coeffs, exps in self.terms:
            coeffs = tuple(c if isinstance(c, Hypercomplex) else Hypercomplex.real(tag, float(c)) for c in coeffs)
            exps = tuple(int(e) for e in exps)
            if len(coeffs) != len(exps) or not coeffs:
                raise InputError("each term needs matching, nonempty coefficient and exponent tuples")
            if any(e < 0 for e in exps):
                raise InputError("exponents must be nonnegative")
            if any(c.tag != tag for c in coeffs):
                raise InputError("coefficient from a different algebra")
            norm_terms.append((coeffs, exps))
        object.__setattr__(self, "terms", tuple(norm_terms))

    @classmethod
    def from_coeffs(cls, tag, coeffs: Sequence) -> "PolySpec":
        """``sum_k c_k z^k``; each ``c_k`` is a real number, a coefficient list or a Hypercomplex."""
        tag = as_tag(tag)
        terms = []
        for k, c in enumerate(coeffs):
            if isinstance(c, (list, tuple, np.ndarray)):
                c = Hypercomplex(tag, list(c) + [0.0] * (tag.dim - len(c)))
            terms.append(((c,), (k,)))
        return cls(tag, tuple(terms))

    @property
    def is_real(self) -> bool:
        return all(np.all(c.coeffs[1:] == 0) for cs, _ in self.terms for c in cs)

    @property
    def degree(self) -> int:
        return max((sum(e) for _, e in self.terms), default=0)

    def __call__(self, z):
        if not isinstance(z, Hypercomplex):
            z = Hypercomplex.real(self.tag, float(z))
        out = Hypercomplex.real(self.tag, 0.0)
        for coeffs, exps in self.terms:
            acc = Hypercomplex.real(self.tag, 1.0)
            for c, e in zip(coeffs, exps):
                acc = mul(acc, c)
                for _ in range(e):
                    acc = mul(acc, z)
            out = out + acc
        return out

    def real_call(self, t: float) -> float:
        return float(self(t).coeffs[0])

    def compose(self, inner: "PolySpec") -> "PolySpec":
        """``self(inner(z))`` for real-coefficient single-coefficient-per-term polynomials."""
        if not (self.is_real and inner.is_real):
            raise InputError("composition implemented for real coefficients")
        a = _real_coeffs(self)
        b = _real_coeffs(inner)
        out = np.zeros(1)
        power = np.ones(1)
        for k, ak in enumerate(a):
            if k:
                power = np.convolve(power, b)
            out = _padd(out, ak * power)
        return PolySpec.from_coeffs(self.tag, out.tolist())

    def multiply(self, other: "PolySpec") -> "PolySpec":
        if not (self.is_real and other.is_real):
            raise InputError("products implemented for real coefficients")
        return PolySpec.from_coeffs(self.tag, np.convolve(_real_coeffs(self), _real_coeffs(other)).tolist())


def _padd(a, b):
    n = max(len(a), len(b))
    return np.pad(a, (0, n - len(a))) + np.pad(b, (0, n - len(b)))


def _real_coeffs(p: PolySpec) -> np.ndarray:
    out = np.zeros(p.degree + 1)
    for coeffs, exps in p.terms:
        c = 1.0
        for cc in coeffs:
            c *= float(cc.coeffs[0])
        out[sum(exps)] += c
    return out


def poly_eval(T: QuasilinearOp, p: PolySpec) -> QuasilinearOp:
    """``sum_k L_{b_{k,1}} T^{k_1} L_{b_{k,2}} T^{k_2} ...``."""
    if p.tag != T.tag:
        raise InputError("polynomial and operator from different algebras")
    N = T.N
    powers = {0: np.eye(N)}

    def tpow(e):
        if e not in powers:
            powers[e] = tpow(e - 1) @ T.rep
        return powers[e]

    rep = np.zeros((N, N))
    for coeffs, exps in p.terms:
        acc = np.eye(N)
        for c, e in zip(coeffs, exps):
            if np.any(c.coeffs[1:] != 0):
                acc = acc @ scalar_block(T.tag, T.n, c, "left")
            else:
                acc = acc * float(c.coeffs[0])
            acc = acc @ tpow(e)
        rep += acc
    return QuasilinearOp(T.tag, T.n, rep)


# -- continuous calculus ---------------------------------------------------------------


def continuous_calculus(T: QuasilinearOp, f: Callable) -> QuasilinearOp:
    """``f(T) = sum_k f(lambda_k) P_k`` for selfadjoint right-linear ``T``."""
    _require_sa_rl(T)
    dec = spectral_decomposition(T)
    values = [f(l) for l, _ in dec.pairs]
    for v in values:
        if isinstance(v, Hypercomplex) and np.any(v.coeffs[1:] != 0):
            im = v.im
            M = Hypercomplex(T.tag, im.coeffs / im.norm())
            _warn_slice(T, M, "continuous_calculus")
            break
    lookup = dict(zip([l for l, _ in dec.pairs], values))
    return spectral_integral(dec, lambda t: lookup[t])


def fractional_power(A: QuasilinearOp, b: float) -> QuasilinearOp:
    """``A^b`` for positive ``A`` (``b < 0`` needs ``A`` invertible)."""
    _require_sa_rl(A)
    dec = spectral_decomposition(A)
    lam = np.array(dec.eigenvalues)
    scale = max(A.norm(), 1e-300)
    if lam.min() < -1e-6 * scale:
        raise NotPositiveError(f"min eigenvalue {lam.min():.3e}")
    if b < 0 and lam.min() <= 1e-12 * scale:
        raise DomainError("negative power of a singular operator")
    if b == 0:
        return identity(A.tag, A.n)
    return spectral_integral(dec, lambda t: max(t, 0.0) ** b)


def sqrt_positive(A: QuasilinearOp) -> QuasilinearOp:
    _require_sa_rl(A)
    dec = spectral_decomposition(A)
    lam = min(dec.eigenvalues)
    if lam < -1e-6 * max(A.norm(), 1e-300):
        raise NotPositiveError(f"operator has eigenvalue {lam:.3e} < 0")
    return spectral_integral(dec, lambda t: math.sqrt(max(t, 0.0)))


def pos_neg_split(A: QuasilinearOp) -> tuple[QuasilinearOp, QuasilinearOp]:
    _require_sa_rl(A)
    dec = spectral_decomposition(A)
    return (spectral_integral(dec, lambda t: max(t, 0.0)),
            spectral_integral(dec, lambda t: max(-t, 0.0)))


def _rep_pos_neg(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, U = np.linalg.eigh((S + S.T) / 2)
    return (U * np.maximum(w, 0)) @ U.T, (U * np.maximum(-w, 0)) @ U.T


def is_positive(A: QuasilinearOp, atol: float = 1e-10) -> bool:
    if not A.selfadjoint:
        return False
    return float(np.linalg.eigvalsh((A.rep + A.rep.T) / 2)[0]) >= -atol * max(1.0, A.norm())


def polar_decompose(T: QuasilinearOp, rtol: float = 1e-9) -> tuple[QuasilinearOp, QuasilinearOp]:
    """``T = P A`` with ``A = sqrt(T* T)`` and ``P`` a partial isometry vanishing off ``range(A)``."""
    if not T.right_linear:
        raise PreconditionError("polar decomposition needs a right-linear operator")
    TT = compose(adjoint(T), T)
    TT = QuasilinearOp(T.tag, T.n, (TT.rep + TT.rep.T) / 2)
    A = sqrt_positive(TT)
    dec = spectral_decomposition(A)
    thr = rtol * max(A.norm(), 1e-300)
    Ainv = spectral_integral(dec, lambda t: 1.0 / t if t > thr else 0.0)
    return compose(T, Ainv), A


# -- contour calculus --------------------------------------------------------------------


@dataclass(frozen=True)
class Contour:
    """Circle ``center + radius * exp(2 pi s M)`` in the slice through ``M``."""

    center: Hypercomplex
    radius: float
    M: Hypercomplex
    nodes: int = 256

    def __post_init__(self):
        _check_unit_imaginary(self.M)
        if self.radius <= 0:
            raise InputError("radius must be positive")
        if self.nodes < 16:
            raise InputError("at least 16 quadrature nodes are required")
        im = self.center.im.coeffs
        par = float(np.dot(im, self.M.coeffs))
        if np.max(np.abs(im - par * self.M.coeffs)) > 1e-12:
            raise InputError("contour center must lie in the slice plane R + M R")

    def points(self) -> tuple[list[Hypercomplex], list[Hypercomplex]]:
        """Nodes and trapezoid weights ``d zeta`` (already divided by the node count)."""
        tag = self.M.tag
        one = np.eye(tag.dim)[0]
        zs, dz = [], []
        for q in range(self.nodes):
            th = 2 * math.pi * q / self.nodes
            e = math.cos(th) * one + math.sin(th) * self.M.coeffs
            zs.append(Hypercomplex(tag, self.center.coeffs + self.radius * e))
            # d/ds r exp(2 pi s M) = 2 pi r M exp(2 pi s M)
            dz.append(mul(self.M, Hypercomplex(tag, e)) * (2 * math.pi * self.radius / self.nodes))
        return zs, dz


@dataclass
class ContourResult:
    op: QuasilinearOp
    validated: bool
    flags: list = field(default_factory=list)
    spectrum: list = field(default_factory=list)


def _slice_spectrum(T: QuasilinearOp, M: Hypercomplex):
    """Spectrum points ``(x, y)`` with ``z = x + y M``, or None when not exactly computable."""
    if slice_compatible(T, M):
        # T is complex-linear for J = L_M; on the +i eigenspace of J, zI - T acts as (x + iy) - T.
        J = scalar_block(T.tag, T.n, M)
        P = (np.eye(T.N) - 1j * J) / 2
        u, s, _ = np.linalg.svd(P)
        Q = u[:, s > 0.5]
        w = np.linalg.eigvals(Q.conj().T @ T.rep @ Q)
        return [(float(v.real), float(v.imag)) for v in w]
    if T.selfadjoint:
        return [(float(p.coeffs[0]), 0.0) for p in spectrum_selfadjoint(T).points]
    return None


def holomorphic_calculus(T: QuasilinearOp, f: Callable, contour: Contour) -> ContourResult:
    """Trapezoid rule for ``(2 pi)^{-1} M^{-1} sum_q f(zeta_q) R(zeta_q; T) d zeta_q``.

    ``f`` maps Hypercomplex to Hypercomplex (or real).  ``M^{-1}`` is applied as a
    left multiplication on the integral; see the package notes for why the
    right-multiplied form is not used.
    """
    tag = T.tag
    M = contour.M
    if M.tag != tag:
        raise InputError("contour and operator from different algebras")
    flags = []
    spec = _slice_spectrum(T, M)
    if spec is None or not slice_compatible(T, M):
        # the left-scalar integral only reproduces f(T) when T commutes with L_M
        flags.append("unvalidated-slice")
    a = contour.center
    ax, ay = float(a.coeffs[0]), float(np.dot(a.coeffs, M.coeffs))
    if spec is not None:
        for x, y in spec:
            if math.hypot(x - ax, y - ay) >= contour.radius:
                raise ContourPlacementError(f"spectrum point {x:+.6g}{y:+.6g}M is outside the contour")
    zs, dzs = contour.points()
    N = T.N
    acc = np.zeros((N, N))
    for z, dz in zip(zs, dzs):
        try:
            R = resolvent(T, z)
        except SpectrumHitError as exc:
            raise ContourPlacementError(f"contour node {z} is in the spectrum") from exc
        fz = f(z)
        if not isinstance(fz, Hypercomplex):
            fz = Hypercomplex.real(tag, float(fz))
        acc += scalar_block(tag, T.n, fz) @ R.rep @ scalar_block(tag, T.n, dz)
    Minv = M.inverse()
    rep = scalar_block(tag, T.n, Minv) @ acc / (2 * math.pi)
    return ContourResult(QuasilinearOp(tag, T.n, rep), "unvalidated-slice" not in flags, flags,
                         spec or [])


# -- Cayley transform and unitary groups --------------------------------------------------


def cayley(T: QuasilinearOp, M: Hypercomplex) -> QuasilinearOp:
    """``U_M(T) = (T - M I)(T + M I)^{-1}``."""
    _check_unit_imaginary(M)
    if not T.selfadjoint:
        raise PreconditionError("Cayley transform needs a selfadjoint operator")
    _warn_slice(T, M, "cayley")
    J = scalar_block(T.tag, T.n, M)
    A = T.rep - J
    B = T.rep + J
    # U = A B^{-1}  <=>  U^T = B^{-T} A^T
    U = np.linalg.solve(B.T, A.T).T
    return QuasilinearOp(T.tag, T.n, U)


def exp_group(B: QuasilinearOp, M: Hypercomplex, t: float) -> QuasilinearOp:
    """``U(t) = exp(t M B) = sum_k (cos(t lambda_k) + M sin(t lambda_k)) P_k``."""
    _check_unit_imaginary(M)
    _require_sa_rl(B)
    _warn_slice(B, M, "exp_group")
    dec = spectral_decomposition(B)
    one = np.eye(B.tag.dim)[0]
    return spectral_integral(dec, lambda lam: Hypercomplex(B.tag, math.cos(t * lam) * one + math.sin(t * lam) * M.coeffs))


def generator_estimate(U: Callable[[float], QuasilinearOp], eps: float) -> QuasilinearOp:
    """``(U(eps) - I) / eps``."""
    if not eps > 0:
        raise InputError("eps must be positive")
    Ue = U(eps)
    return QuasilinearOp(Ue.tag, Ue.n, (Ue.rep - np.eye(Ue.N)) / eps)


def unitary_split(A: QuasilinearOp, M: Hypercomplex, slack: float = 1e-10) -> QuasilinearOp:
    """``U = f(A)`` with ``f(t) = t + M sqrt(1 - t^2)``, so that ``A = (U + U*)/2``."""
    _check_unit_imaginary(M)
    _require_sa_rl(A)
    if A.norm() > 1 + slack:
        raise PreconditionError(f"need ||A|| <= 1, got {A.norm():.6g}")
    _warn_slice(A, M, "unitary_split")
    dec = spectral_decomposition(A)
    one = np.eye(A.tag.dim)[0]

    def f(t):
        t = min(max(t, -1.0), 1.0)
        return Hypercomplex(A.tag, t * one + math.sqrt(max(0.0, 1 - t * t)) * M.coeffs)

    return spectral_integral(dec, f)


# -- approximate unit -----------------------------------------------------------------------


@dataclass
class ApproximateUnit:
    S: QuasilinearOp
    H: QuasilinearOp
    _dec: object = None

    @classmethod
    def build(cls, S: QuasilinearOp) -> "ApproximateUnit":
        SS = compose(adjoint(S), S)
        SS = QuasilinearOp(S.tag, S.n, (SS.rep + SS.rep.T) / 2)
        H = sqrt_positive(SS)
        return cls(S, H, spectral_decomposition(H))

    def factor(self, n: float) -> QuasilinearOp:
        """``(I/n + H)^{-1/2}``."""
        return spectral_integral(self._dec, lambda t: (1.0 / n + max(t, 0.0)) ** -0.5)

    def term(self, n: float) -> QuasilinearOp:
        """``A_n = S (I/n + H)^{-1/2}``."""
        return compose(self.S, self.factor(n))

    def gap(self, m: float, n: float) -> tuple[float, float]:
        """``(||A_m - A_n||, sup_{t in sp(H)} |f_{m,n}(t)|)``."""
        measured = (self.term(m) - self.term(n)).norm()
        predicted = max(abs(t * ((1 / m + t) ** -0.5 - (1 / n + t) ** -0.5))
                        for t in (max(l, 0.0) for l in self._dec.eigenvalues))
        return measured, predicted


def approximate_unit(S: QuasilinearOp, n: float, H: QuasilinearOp | None = None) -> QuasilinearOp:
    if n < 1:
        raise InputError("n must be >= 1")
    au = ApproximateUnit.build(S)
    if H is not None and np.max(np.abs(H.rep - au.H.rep)) > 1e-8 * max(1.0, H.norm()):
        raise PreconditionError("H must equal sqrt(S* S)")
    return au.term(n)


# -- positive combinations ----------------------------------------------------------------


def positive_combination(A: QuasilinearOp, drop_tol: float = 1e-12) -> list[tuple[Hypercomplex, QuasilinearOp]]:
    """Write ``A`` as ``sum_j c_j P_j`` with ``c_j`` in K and ``P_j`` positive (``c P`` is ``L_c P``).

    Uses ``A = sum_v i_v A_v`` with real ``A_v``.  Selfadjoint pieces:
    ``S_0 = sym A_0 + sum_{v>=1} i_v skew A_v``, ``S_1 = sym A_1 - i_1 skew A_0``,
    ``S_v = sym A_v`` for ``v >= 2``, with coefficients ``1, i_1, i_v``.  Each
    piece is split into positive and negative parts, giving at most ``2(m+1)`` terms.
    """
    if not A.right_linear:
        raise PreconditionError("positive_combination needs a right-linear operator")
    tag = A.tag
    d = tag.dim
    Av = component_matrices(A)
    sym = [(X + X.T) / 2 for X in Av]
    skew = [(X - X.T) / 2 for X in Av]
    gens = [Hypercomplex.generator(tag, v) for v in range(d)]
    pieces: list[tuple[Hypercomplex, np.ndarray]] = []

    def op_of(real_parts: dict) -> np.ndarray:
        # sum_v L_{i_v} (X_v (x) I)
        rep = np.zeros((A.N, A.N))
        for v, X in real_parts.items():
            rep += scalar_block(tag, A.n, gens[v]) @ np.kron(X, np.eye(d))
        return rep

    S0 = {0: sym[0]}
    for v in range(1, d):
        S0[v] = skew[v]
    pieces.append((gens[0], op_of(S0)))
    pieces.append((gens[1], op_of({0: sym[1]}) - op_of({1: skew[0]})))
    for v in range(2, d):
        pieces.append((gens[v], op_of({0: sym[v]})))
    scale = max(1.0, A.norm())
    out = []
    for c, S in pieces:
        Sp, Sn = _rep_pos_neg(S)
        for coef, P in ((c, Sp), (-c, Sn)):
            if np.max(np.abs(P), initial=0.0) > drop_tol * scale:
                out.append((coef, QuasilinearOp(tag, A.n, P)))
    return out


def recombine(terms: Sequence[tuple[Hypercomplex, QuasilinearOp]], tag=None, n: int | None = None) -> QuasilinearOp:
    terms = list(terms)
    if not terms:
        return QuasilinearOp.zeros(tag, n)
    acc = None
    for c, P in terms:
        t = left_scalar_op(c, P)
        acc = t if acc is None else acc + t
    return acc
