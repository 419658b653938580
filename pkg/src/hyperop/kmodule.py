"""The module K^n: vectors, the K-valued scalar product, orthogonalisation, functionals."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import kernels
from .algebra import Hypercomplex, as_tag
from .errors import DegenerateDistanceError, DependentInputError, InputError, TagMismatchError

RANK_RTOL = 1e-10


class KVector:
    """A vector in K^n; ``data`` has shape ``(n, m + 1)``, row ``l`` holds coordinate ``l``."""

    __slots__ = ("tag", "data")

    def __init__(self, tag, data):
        tag = as_tag(tag)
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 1:
            if arr.size % tag.dim:
                raise InputError(f"flat length {arr.size} is not a multiple of {tag.dim}")
            arr = arr.reshape(-1, tag.dim)
        if arr.ndim != 2 or arr.shape[1] != tag.dim:
            raise InputError(f"coordinates must have shape (n, {tag.dim})")
        if not np.all(np.isfinite(arr)):
            raise InputError("coordinates must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("KVector is immutable")

    @classmethod
    def from_coords(cls, coords: Sequence[Hypercomplex]) -> "KVector":
        coords = list(coords)
        if not coords:
            raise InputError("empty coordinate list")
        tag = coords[0].tag
        for c in coords:
            if c.tag != tag:
                raise TagMismatchError("coordinates from different algebras")
        return cls(tag, np.stack([c.coeffs for c in coords]))

    @classmethod
    def basis(cls, tag, n: int, l: int, scalar: Hypercomplex | None = None) -> "KVector":
        """``e_l`` (0-based), optionally times ``scalar`` on the right."""
        tag = as_tag(tag)
        data = np.zeros((n, tag.dim))
        data[l, 0] = 1.0
        v = cls(tag, data)
        return v if scalar is None else v.rmul(scalar)

    @classmethod
    def zeros(cls, tag, n: int) -> "KVector":
        tag = as_tag(tag)
        return cls(tag, np.zeros((n, tag.dim)))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def coord(self, l: int) -> Hypercomplex:
        return Hypercomplex(self.tag, self.data[l])

    def _check(self, other: "KVector") -> None:
        if not isinstance(other, KVector):
            raise TypeError("expected KVector")
        if other.tag != self.tag:
            raise TagMismatchError(f"{self.tag.kind} vs {other.tag.kind}")
        if other.n != self.n:
            raise InputError(f"dimension mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        self._check(other)
        return KVector(self.tag, self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return KVector(self.tag, self.data - other.data)

    def __neg__(self):
        return KVector(self.tag, -self.data)

    def __mul__(self, c):
        if isinstance(c, Hypercomplex):
            return self.rmul(c)
        return KVector(self.tag, self.data * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return KVector(self.tag, self.data / float(c))

    def rmul(self, a: Hypercomplex) -> "KVector":
        """``x a``: every coordinate multiplied by ``a`` on the right."""
        t = self.tag
        b = np.broadcast_to(a.coeffs, self.data.shape)
        return KVector(t, kernels.mul_batch(self.data, b, t.idx, t.sgn))

    def lmul(self, a: Hypercomplex) -> "KVector":
        """``a x``."""
        t = self.tag
        b = np.broadcast_to(a.coeffs, self.data.shape)
        return KVector(t, kernels.mul_batch(b, self.data, t.idx, t.sgn))

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def __repr__(self):
        return f"KVector[{self.tag.kind}](n={self.n}, {self.data.tolist()})"

    def to_json(self) -> dict:
        return {"algebra": self.tag.kind, "coords": self.data.tolist()}

    @classmethod
    def from_json(cls, obj) -> "KVector":
        try:
            return cls(obj["algebra"], obj["coords"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed KVector JSON: {exc}") from exc


def random_kvector(tag, n: int, rng: np.random.Generator, unit: bool = False) -> KVector:
    tag = as_tag(tag)
    v = KVector(tag, rng.standard_normal((n, tag.dim)))
    return v / v.norm() if unit else v


def inner(zeta: KVector, z: KVector) -> Hypercomplex:
    """``<zeta; z> = sum_l conj(zeta_l) z_l``."""
    zeta._check(z)
    t = zeta.tag
    return Hypercomplex(t, kernels.kinner(zeta.data, z.data, t.idx, t.sgn))


def real_inner(x: KVector, y: KVector) -> float:
    """``Re <x; y>``, the Euclidean product of the flattened real coordinates."""
    x._check(y)
    return float(np.dot(x.flat, y.flat))


def _scale(vectors: Sequence[KVector]) -> float:
    return max((v.norm() for v in vectors), default=0.0)


def right_span_columns(vectors: Sequence[KVector]) -> np.ndarray:
    """Columns ``v i_p`` over all vectors and generators, as a real ``(N, k(m+1))`` matrix.

    ``<q; v> = 0`` is equivalent to ``v`` being real-orthogonal to every column
    built from ``q``, in both H and O, because ``Re((ab)c) = Re(a(bc))``.
    """
    vectors = list(vectors)
    if not vectors:
        return np.zeros((0, 0))
    tag = vectors[0].tag
    cols = []
    for v in vectors:
        rm = kernels.right_mats(np.eye(tag.dim), tag.idx, tag.sgn)
        # (v i_p)_l = R_{i_p} v_l
        cols.append(np.einsum("pab,lb->lap", rm, v.data).reshape(-1, tag.dim))
    return np.concatenate(cols, axis=1)


def right_span_basis(vectors: Sequence[KVector], tol: float = 1e-9) -> np.ndarray:
    """Real orthonormal basis (as columns) of the right K-span ``{sum_j v_j a_j}``."""
    a = right_span_columns(vectors)
    if a.size == 0:
        return a
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return u[:, :0]
    return u[:, s > tol * s[0]]


def _project_out(basis: np.ndarray, x: KVector) -> KVector:
    if basis.size == 0:
        return x
    f = x.flat
    for _ in range(2):
        f = f - basis @ (basis.T @ f)
    return KVector(x.tag, f)


def span_project(vectors: Sequence[KVector], x: KVector) -> KVector:
    """Real orthogonal projection of ``x`` onto the right K-span of ``vectors``."""
    return x - _project_out(right_span_basis(vectors), x)


def gram_schmidt_k(vectors: Sequence[KVector], rtol: float = RANK_RTOL) -> list[KVector]:
    """K-orthonormalise ``vectors``, keeping their right K-span.

    Each vector loses its real projection onto the right span of the earlier
    outputs; a residual below ``rtol * scale`` raises :class:`DependentInputError`.
    """
    vectors = list(vectors)
    if not vectors:
        return []
    for v in vectors[1:]:
        vectors[0]._check(v)
    scale = _scale(vectors)
    out: list[KVector] = []
    basis = np.zeros((vectors[0].flat.size, 0))
    for idx, x in enumerate(vectors):
        v = _project_out(basis, x)
        piv = v.norm()
        if piv <= rtol * max(scale, 1e-300):
            raise DependentInputError(idx, piv)
        q = v / piv
        out.append(q)
        basis = _orth_extend(basis, right_span_columns([q]))
    return out


def _orth_extend(basis: np.ndarray, cols: np.ndarray) -> np.ndarray:
    for c in cols.T:
        for _ in range(2):
            c = c - basis @ (basis.T @ c)
        nrm = np.linalg.norm(c)
        if nrm > 1e-9:
            basis = np.column_stack([basis, c / nrm])
    return basis


def k_project(basis_q: Sequence[KVector], x: KVector) -> KVector:
    """``sum_j q_j <q_j; x>`` for a K-orthonormal list (exact projection over H)."""
    out = KVector.zeros(x.tag, x.n)
    for q in basis_q:
        out = out + q.rmul(inner(q, x))
    return out


def orth_complement(basis: Sequence[KVector], n: int | None = None, tag=None, rtol: float = RANK_RTOL) -> list[KVector]:
    """K-orthonormal vectors ``w`` with ``<y_j; w> = 0``, filling K^n together with ``basis``."""
    basis = list(basis)
    if basis:
        tag, n = basis[0].tag, basis[0].n
    elif tag is None or n is None:
        raise InputError("empty basis needs explicit tag and n")
    tag = as_tag(tag)
    k = len(gram_schmidt_k(basis, rtol)) if basis else 0
    span = right_span_basis(basis) if basis else np.zeros((n * tag.dim, 0))
    out: list[KVector] = []
    for l in range(n):
        if k + len(out) == n:
            break
        v = _project_out(span, KVector.basis(tag, n, l))
        piv = v.norm()
        if piv > 1e-8:
            w = v / piv
            out.append(w)
            span = _orth_extend(span, right_span_columns([w]))
    return out


def real_span_dim(vectors: Sequence[KVector], side: str = "right", tol: float = 1e-9) -> int:
    """Real dimension of the left, right or two-sided K-span of ``vectors``."""
    vectors = list(vectors)
    if not vectors:
        return 0
    tag = vectors[0].tag
    gens = [Hypercomplex.generator(tag, p) for p in range(tag.dim)]
    rows = []
    for v in vectors:
        for g in gens:
            if side in ("right", "two"):
                rows.append(v.rmul(g).flat)
            if side in ("left", "two"):
                rows.append(v.lmul(g).flat)
            if side == "two":
                for h in gens:
                    rows.append(v.lmul(g).rmul(h).flat)
    s = np.linalg.svd(np.array(rows), compute_uv=False)
    return int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0


class KFunctional:
    """``f(x) = <w; x>``; when ``domain`` is given, ``f`` is considered only on that subspace."""

    __slots__ = ("tag", "representer", "domain")

    def __init__(self, representer: KVector, domain: Sequence[KVector] | None = None):
        self.tag = representer.tag
        self.representer = representer
        self.domain = None if domain is None else list(domain)

    def __call__(self, x: KVector) -> Hypercomplex:
        return inner(self.representer, x)

    def norm(self) -> float:
        if self.domain is None:
            return self.representer.norm()
        if not self.domain:
            return 0.0
        return span_project(self.domain, self.representer).norm()

    def __repr__(self):
        return f"KFunctional(w={self.representer!r})"


def distance_functional(basis: Sequence[KVector], x: KVector, rtol: float = RANK_RTOL) -> KFunctional:
    """Functional with ``f(x) = 1``, ``|f| = 1/d`` and ``f = 0`` on ``span_K(basis)``."""
    basis = list(basis)
    p = _project_out(right_span_basis(basis), x) if basis else x
    d = p.norm()
    if d <= rtol * max(x.norm(), 1e-300):
        raise DegenerateDistanceError(f"x lies in the subspace (distance {d:.3e})")
    return KFunctional(p / (d * d))


def extend_functional(g: KFunctional, basis: Sequence[KVector] | None = None) -> KFunctional:
    """Extend ``g`` from its domain to all of K^n by zero on the orthogonal complement."""
    basis = g.domain if basis is None else list(basis)
    if not basis:
        return KFunctional(KVector.zeros(g.tag, g.representer.n))
    return KFunctional(span_project(basis, g.representer))
