"""Cayley-Dickson arithmetic for the quaternions H and the octonions O.

Coordinates live on the standard generators ``1, i, j, k`` (H) and
``1, i, j, k, l, il, jl, kl`` (O).  Every product goes through a
precomputed generator table built once from the doubling law
``(a + b l)(c + d l) = (a c - conj(d) b) + (d a + b conj(c)) l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence, Union

import numpy as np

from . import kernels
from .errors import DomainError, InputError, TagMismatchError

Real = Union[int, float, np.floating]

_LABELS = {
    "H": ("1", "i", "j", "k"),
    "O": ("1", "i", "j", "k", "l", "il", "jl", "kl"),
}


def _cd_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Recursive doubling product; only used to build tables and as a test oracle."""
    d = a.shape[0]
    if d == 1:
        return a * b
    h = d // 2
    al, be = a[:h], a[h:]
    ga, de = b[:h], b[h:]
    return np.concatenate([
        _cd_mul(al, ga) - _cd_mul(_cd_conj(de), be),
        _cd_mul(de, al) + _cd_mul(be, _cd_conj(ga)),
    ])


def _cd_conj(a: np.ndarray) -> np.ndarray:
    out = -a
    out[0] = a[0]
    return out


@dataclass(frozen=True, eq=False)
class AlgebraTag:
    """One of the two algebras.  Instances are singletons; compare with ``==`` or ``is``."""

    kind: str
    dim: int
    rank: int
    labels: tuple
    idx: np.ndarray = field(repr=False)
    sgn: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return self.dim - 1

    def kappa(self, p: int) -> int:
        return 0 if p == 0 else 1

    def __eq__(self, other):
        return isinstance(other, AlgebraTag) and other.kind == self.kind

    def __hash__(self):
        return hash(self.kind)

    def __reduce__(self):
        return (get_algebra, (self.kind,))

    @property
    def structure(self) -> np.ndarray:
        return _structure(self.kind)


@lru_cache(maxsize=None)
def _structure(kind: str) -> np.ndarray:
    tag = get_algebra(kind)
    return kernels.structure_tensor(tag.idx, tag.sgn)


@lru_cache(maxsize=None)
def get_algebra(kind: str) -> AlgebraTag:
    kind = str(kind).upper()
    if kind not in _LABELS:
        raise InputError(f"unknown algebra {kind!r}; expected 'H' or 'O'")
    dim = len(_LABELS[kind])
    idx = np.zeros((dim, dim), dtype=np.int64)
    sgn = np.zeros((dim, dim), dtype=np.float64)
    eye = np.eye(dim)
    for p in range(dim):
        for q in range(dim):
            prod = _cd_mul(eye[p], eye[q])
            r = int(np.flatnonzero(prod)[0])
            idx[p, q] = r
            sgn[p, q] = prod[r]
    idx.setflags(write=False)
    sgn.setflags(write=False)
    return AlgebraTag(kind, dim, int(round(math.log2(dim))), _LABELS[kind], idx, sgn)


H = get_algebra("H")
O = get_algebra("O")


def as_tag(tag) -> AlgebraTag:
    return tag if isinstance(tag, AlgebraTag) else get_algebra(tag)


class Hypercomplex:
    """An element of H or O stored as real coordinates on the standard generators."""

    __slots__ = ("tag", "coeffs")

    def __init__(self, tag, coeffs):
        tag = as_tag(tag)
        c = np.array(coeffs, dtype=np.float64).reshape(-1)
        if c.shape[0] != tag.dim:
            raise InputError(f"{tag.kind} needs {tag.dim} coefficients, got {c.shape[0]}")
        if not np.all(np.isfinite(c)):
            raise InputError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("Hypercomplex is immutable")

    # constructors
    @classmethod
    def real(cls, tag, value: Real = 1.0) -> "Hypercomplex":
        tag = as_tag(tag)
        c = np.zeros(tag.dim)
        c[0] = value
        return cls(tag, c)

    @classmethod
    def generator(cls, tag, p: int) -> "Hypercomplex":
        tag = as_tag(tag)
        c = np.zeros(tag.dim)
        c[p] = 1.0
        return cls(tag, c)

    @classmethod
    def from_label(cls, tag, label: str) -> "Hypercomplex":
        tag = as_tag(tag)
        return cls.generator(tag, tag.labels.index(label))

    # arithmetic
    def _coerce(self, other) -> "Hypercomplex":
        if isinstance(other, Hypercomplex):
            if other.tag != self.tag:
                raise TagMismatchError(f"cannot combine {self.tag.kind} with {other.tag.kind}")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Hypercomplex.real(self.tag, float(other))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Hypercomplex(self.tag, self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Hypercomplex(self.tag, self.coeffs - o.coeffs)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Hypercomplex(self.tag, o.coeffs - self.coeffs)

    def __neg__(self):
        return Hypercomplex(self.tag, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Hypercomplex(self.tag, self.coeffs * float(other))
        return mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Hypercomplex(self.tag, self.coeffs * float(other))
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            if other == 0:
                raise DomainError("division by zero")
            return Hypercomplex(self.tag, self.coeffs / float(other))
        return mul(self, inverse(other))

    def __eq__(self, other):
        if not isinstance(other, Hypercomplex):
            return NotImplemented
        return self.tag == other.tag and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.tag.kind, self.coeffs.tobytes()))

    def __repr__(self):
        terms = " ".join(f"{c:+.6g}{'' if lab == '1' else lab}" for c, lab in zip(self.coeffs, self.tag.labels))
        return f"Hypercomplex[{self.tag.kind}]({terms})"

    def conj(self) -> "Hypercomplex":
        return conj(self)

    def norm(self) -> float:
        return norm(self)

    def inverse(self) -> "Hypercomplex":
        return inverse(self)

    @property
    def re(self) -> float:
        return float(self.coeffs[0])

    @property
    def im(self) -> "Hypercomplex":
        c = self.coeffs.copy()
        c[0] = 0.0
        return Hypercomplex(self.tag, c)

    def isclose(self, other, atol: float = 1e-13) -> bool:
        o = self._coerce(other)
        return bool(np.max(np.abs(self.coeffs - o.coeffs)) <= atol)

    def to_json(self) -> dict:
        return {"algebra": self.tag.kind, "coeffs": [float(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj) -> "Hypercomplex":
        try:
            return cls(obj["algebra"], obj["coeffs"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed hypercomplex JSON: {exc}") from exc


def mul(a: Hypercomplex, b: Hypercomplex) -> Hypercomplex:
    if not isinstance(a, Hypercomplex) or not isinstance(b, Hypercomplex):
        raise TypeError("mul expects two Hypercomplex values")
    if a.tag != b.tag:
        raise TagMismatchError(f"cannot multiply {a.tag.kind} by {b.tag.kind}")
    t = a.tag
    out = kernels.mul_batch(a.coeffs[None, :], b.coeffs[None, :], t.idx, t.sgn)[0]
    return Hypercomplex(t, out)


def conj(a: Hypercomplex) -> Hypercomplex:
    c = -a.coeffs
    c[0] = a.coeffs[0]
    return Hypercomplex(a.tag, c)


def norm(a: Hypercomplex) -> float:
    return float(np.sqrt(np.dot(a.coeffs, a.coeffs)))


def inverse(a: Hypercomplex) -> Hypercomplex:
    n2 = float(np.dot(a.coeffs, a.coeffs))
    if n2 == 0.0:
        raise DomainError("inverse of zero")
    return Hypercomplex(a.tag, conj(a).coeffs / n2)


def associator(a: Hypercomplex, b: Hypercomplex, c: Hypercomplex) -> Hypercomplex:
    """``(ab)c - a(bc)``."""
    return mul(mul(a, b), c) - mul(a, mul(b, c))


def power(z: Hypercomplex, n: int) -> Hypercomplex:
    """Left-associated ``(((z z) z) ... ) z``; ``power(z, 0)`` is 1."""
    if n < 0 or int(n) != n:
        raise DomainError("power needs a nonnegative integer exponent")
    out = Hypercomplex.real(z.tag, 1.0)
    for _ in range(int(n)):
        out = mul(out, z)
    return out


class PolarForm(NamedTuple):
    r: float
    axis: Hypercomplex
    t: float
    axis_defaulted: bool


def _check_unit_imaginary(M: Hypercomplex, atol: float = 1e-12) -> None:
    if abs(M.coeffs[0]) > atol or abs(norm(M) - 1.0) > atol:
        raise DomainError("axis must be a unit imaginary element (|M| = 1, Re M = 0)")


def polar_exp(r: float, M: Hypercomplex, t: float) -> Hypercomplex:
    """``r (cos t + M sin t)``."""
    if r < 0:
        raise DomainError("polar radius must be nonnegative")
    _check_unit_imaginary(M)
    return Hypercomplex(M.tag, r * (math.sin(t) * M.coeffs + math.cos(t) * np.eye(M.tag.dim)[0]))


def polar_log(z: Hypercomplex) -> PolarForm:
    """Return ``(r, M, t, axis_defaulted)`` with ``t`` in ``[0, pi]``.

    For real ``z`` the axis cannot be recovered; ``i_1`` is returned and
    ``axis_defaulted`` is set.
    """
    r = norm(z)
    if r == 0.0:
        raise DomainError("polar_log of zero")
    im = z.coeffs.copy()
    im[0] = 0.0
    s = float(np.sqrt(np.dot(im, im)))
    t = math.atan2(s, float(z.coeffs[0]))
    if s == 0.0:
        return PolarForm(r, Hypercomplex.generator(z.tag, 1), t, True)
    return PolarForm(r, Hypercomplex(z.tag, im / s), t, False)


# -- component extraction ---------------------------------------------------

def _conj_rows(a: np.ndarray) -> np.ndarray:
    out = -a
    out[..., 0] = a[..., 0]
    return out


def component_extract_batch(tag, z: np.ndarray) -> np.ndarray:
    """Vectorised extraction for an ``(n, d)`` array; see :func:`component_extract`."""
    tag = as_tag(tag)
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    n, d = z.shape
    gens = np.eye(d)
    acc = -z
    for g in range(1, d):
        gi = np.broadcast_to(gens[g], (n, d))
        gi_conj = np.broadcast_to(_conj_rows(gens[g][None, :])[0], (n, d))
        acc = acc + kernels.mul_batch(gi, kernels.mul_batch(z, gi_conj, tag.idx, tag.sgn), tag.idx, tag.sgn)
    brace = acc / (2 ** tag.rank - 2)
    out = np.empty((n, d))
    out[:, 0] = ((z + brace) / 2.0)[:, 0]
    for v in range(1, d):
        gv = np.broadcast_to(gens[v], (n, d))
        term = -kernels.mul_batch(z, gv, tag.idx, tag.sgn) + kernels.mul_batch(gv, brace, tag.idx, tag.sgn)
        out[:, v] = (term / 2.0)[:, 0]
    return out


def component_extract(z: Hypercomplex) -> np.ndarray:
    """Real components ``z_0 .. z_m`` computed from products, not coordinate reads.

    Uses ``z_0 = (z + B)/2`` and ``z_v = (-z i_v + i_v B)/2`` where
    ``B = (2^r - 2)^{-1} (-z + sum_{n>=1} i_n (z conj(i_n)))`` equals ``conj(z)``.
    Each right-hand side is real; its real coordinate is returned.
    """
    return component_extract_batch(z.tag, z.coeffs[None, :])[0]


# -- real representations ---------------------------------------------------

def left_mult_matrix(a: Hypercomplex) -> np.ndarray:
    """Matrix ``L`` with ``L @ x.coeffs == (a x).coeffs``."""
    t = a.tag
    return kernels.left_mats(a.coeffs[None, :], t.idx, t.sgn)[0]


def right_mult_matrix(a: Hypercomplex) -> np.ndarray:
    """Matrix ``R`` with ``R @ x.coeffs == (x a).coeffs``."""
    t = a.tag
    return kernels.right_mats(a.coeffs[None, :], t.idx, t.sgn)[0]


def is_automorphism(Q: np.ndarray, tag, atol: float = 1e-12) -> bool:
    """Check that a real ``(d, d)`` matrix is an automorphism of the algebra.

    Requires orthogonality, ``Q e_0 = e_0`` and ``Q(i_p i_q) = Q(i_p) Q(i_q)``
    on all generator pairs.
    """
    tag = as_tag(tag)
    Q = np.asarray(Q, dtype=np.float64)
    d = tag.dim
    if Q.shape != (d, d):
        return False
    if np.max(np.abs(Q.T @ Q - np.eye(d))) > atol:
        return False
    if np.max(np.abs(Q[:, 0] - np.eye(d)[0])) > atol:
        return False
    c = tag.structure
    # Q(i_p i_q) = sum_r C[p,q,r] Q[:, r]
    lhs = np.einsum("pqr,sr->pqs", c, Q)
    rhs = np.einsum("ap,bq,abs->pqs", Q, Q, c)
    return bool(np.max(np.abs(lhs - rhs)) <= atol)


def random_hypercomplex(tag, rng: np.random.Generator, size: int | None = None, scale: float = 1.0):
    """Gaussian coefficients; returns one element or a list of ``size`` elements."""
    tag = as_tag(tag)
    if size is None:
        return Hypercomplex(tag, scale * rng.standard_normal(tag.dim))
    return [Hypercomplex(tag, scale * row) for row in rng.standard_normal((size, tag.dim))]


def stack(values: Sequence[Hypercomplex]) -> np.ndarray:
    return np.stack([v.coeffs for v in values])
