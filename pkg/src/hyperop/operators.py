"""Quasilinear operators on K^n, stored as real ``N x N`` matrices with ``N = (m + 1) n``.

The flattened layout is coordinate-major, generator-minor: real index
``l * (m + 1) + v`` holds component ``v`` of coordinate ``l``.
"""

from __future__ import annotations

import threading
from typing import Sequence

import numpy as np

from . import kernels
from .algebra import AlgebraTag, Hypercomplex, as_tag, component_extract_batch
from .errors import InputError, PreconditionError, TagMismatchError, UnsupportedAlgebraError
from .kmodule import KVector

FLAG_ATOL = 1e-11


def scalar_block(tag, n: int, z: Hypercomplex, side: str = "left") -> np.ndarray:
    """``blockdiag(L_z)`` (or ``R_z``) acting on every coordinate of K^n."""
    tag = as_tag(tag)
    mats = kernels.left_mats if side == "left" else kernels.right_mats
    m = mats(z.coeffs[None, :], tag.idx, tag.sgn)[0]
    return np.kron(np.eye(n), m)


class QuasilinearOp:
    """An R-linear map of K^n.  ``rep`` is read-only; flags are computed once on demand."""

    __slots__ = ("tag", "n", "rep", "_flags", "_lock")

    def __init__(self, tag, n: int, rep):
        tag = as_tag(tag)
        rep = np.array(rep, dtype=np.float64)
        N = tag.dim * int(n)
        if rep.shape != (N, N):
            raise InputError(f"rep must be {N}x{N} for n={n} over {tag.kind}, got {rep.shape}")
        if not np.all(np.isfinite(rep)):
            raise InputError("rep must be finite")
        rep.setflags(write=False)
        self.tag = tag
        self.n = int(n)
        self.rep = rep
        self._flags: dict = {}
        self._lock = threading.Lock()

    # -- construction ----------------------------------------------------------

    @classmethod
    def identity(cls, tag, n: int) -> "QuasilinearOp":
        tag = as_tag(tag)
        return cls(tag, n, np.eye(tag.dim * n))

    @classmethod
    def zeros(cls, tag, n: int) -> "QuasilinearOp":
        tag = as_tag(tag)
        return cls(tag, n, np.zeros((tag.dim * n, tag.dim * n)))

    @property
    def N(self) -> int:
        return self.rep.shape[0]

    def _like(self, rep) -> "QuasilinearOp":
        return QuasilinearOp(self.tag, self.n, rep)

    def _check(self, other: "QuasilinearOp") -> None:
        if not isinstance(other, QuasilinearOp):
            raise TypeError("expected QuasilinearOp")
        if other.tag != self.tag:
            raise TagMismatchError(f"{self.tag.kind} vs {other.tag.kind}")
        if other.n != self.n:
            raise InputError(f"dimension mismatch: n={self.n} vs n={other.n}")

    # -- algebra -----------------------------------------------------------------

    def apply(self, x: KVector) -> KVector:
        if x.tag != self.tag:
            raise TagMismatchError(f"{self.tag.kind} operator on {x.tag.kind} vector")
        if x.n != self.n:
            raise InputError(f"dimension mismatch: n={self.n} vs vector n={x.n}")
        return KVector(self.tag, self.rep @ x.flat)

    __call__ = apply

    def __matmul__(self, other):
        if isinstance(other, KVector):
            return self.apply(other)
        return compose(self, other)

    def __add__(self, other):
        self._check(other)
        return self._like(self.rep + other.rep)

    def __sub__(self, other):
        self._check(other)
        return self._like(self.rep - other.rep)

    def __neg__(self):
        return self._like(-self.rep)

    def __mul__(self, c):
        return scale_real(self, c)

    __rmul__ = __mul__

    @property
    def T(self) -> "QuasilinearOp":
        return adjoint(self)

    def norm(self) -> float:
        return operator_norm(self)

    # -- lazy flags ----------------------------------------------------------------

    def _flag(self, name, fn):
        # Once-only: concurrent readers wait for the first computation.
        with self._lock:
            if name not in self._flags:
                self._flags[name] = fn(self)
            return self._flags[name]

    @property
    def right_linear(self) -> bool:
        return self._flag("right_linear", _is_right_linear)

    @property
    def selfadjoint(self) -> bool:
        return self._flag("selfadjoint", _is_selfadjoint)

    @property
    def normal(self) -> bool:
        return self._flag("normal", _is_normal)

    # -- misc ----------------------------------------------------------------------

    def allclose(self, other: "QuasilinearOp", atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.max(np.abs(self.rep - other.rep), initial=0.0) <= atol)

    def __repr__(self):
        return f"QuasilinearOp[{self.tag.kind}](n={self.n})"

    def __getstate__(self):
        return {"tag": self.tag.kind, "n": self.n, "rep": np.array(self.rep)}

    def __setstate__(self, st):
        self.__init__(st["tag"], st["n"], st["rep"])

    def to_json(self) -> dict:
        return {"algebra": self.tag.kind, "n": self.n, "rep": self.rep.tolist()}

    @classmethod
    def from_json(cls, obj) -> "QuasilinearOp":
        """Accepts either a ``rep`` matrix or an ``entries`` n x n grid of coefficient lists."""
        try:
            kind, n = obj["algebra"], int(obj["n"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"operator JSON needs 'algebra' and 'n': {exc}") from exc
        if "rep" in obj:
            return cls(kind, n, obj["rep"])
        if "entries" in obj:
            tag = as_tag(kind)
            ent = _parse_entries(tag, obj["entries"])
            if ent.shape[:2] != (n, n):
                raise InputError(f"entries must be {n}x{n}")
            return from_k_matrix(tag, ent)
        raise InputError("operator JSON needs 'rep' or 'entries'")


def _parse_entries(tag: AlgebraTag, entries) -> np.ndarray:
    rows = []
    for row in entries:
        r = []
        for e in row:
            if isinstance(e, Hypercomplex):
                if e.tag != tag:
                    raise TagMismatchError(f"{e.tag.kind} entry in {tag.kind} matrix")
                e = e.coeffs.tolist()
            if isinstance(e, dict):
                e = e.get("coeffs")
            if isinstance(e, (int, float, np.floating, np.integer)):
                e = [float(e)]
            if isinstance(e, np.ndarray):
                e = e.tolist()
            if isinstance(e, (list, tuple)) and len(e) < tag.dim:
                # short coefficient lists are padded with zeros
                e = list(e) + [0.0] * (tag.dim - len(e))
            r.append(e)
        rows.append(r)
    try:
        arr = np.array(rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputError(f"malformed entries: {exc}") from exc
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != tag.dim:
        raise InputError(f"entries must be an n x n grid of at most {tag.dim}-coefficient lists")
    return arr


def identity(tag, n: int) -> QuasilinearOp:
    return QuasilinearOp.identity(tag, n)


def compose(U: QuasilinearOp, T: QuasilinearOp) -> QuasilinearOp:
    """``U T``: first ``T``, then ``U``."""
    U._check(T)
    return U._like(U.rep @ T.rep)


def add(U: QuasilinearOp, T: QuasilinearOp) -> QuasilinearOp:
    return U + T


def scale_real(T: QuasilinearOp, c) -> QuasilinearOp:
    if isinstance(c, Hypercomplex):
        raise TypeError("use left_scalar_op/right_scalar_op for hypercomplex scalars")
    return T._like(T.rep * float(c))


def from_k_matrix(tag, entries) -> QuasilinearOp:
    """``x -> A x`` for an n x n matrix ``A`` over K.

    ``entries`` is an ``(n, n, m + 1)`` array or a nested list of
    :class:`Hypercomplex`.
    """
    tag = as_tag(tag)
    if isinstance(entries, np.ndarray):
        ent = np.asarray(entries, dtype=np.float64)
    else:
        ent = _parse_entries(tag, entries)
    if ent.ndim != 3 or ent.shape[0] != ent.shape[1] or ent.shape[2] != tag.dim:
        raise InputError(f"entries must have shape (n, n, {tag.dim})")
    return QuasilinearOp(tag, ent.shape[0], kernels.block_left_rep(ent, tag.idx, tag.sgn))


def real_matrix_op(tag, A) -> QuasilinearOp:
    """``A`` real n x n acting on every generator component alike."""
    tag = as_tag(tag)
    A = np.asarray(A, dtype=np.float64)
    return QuasilinearOp(tag, A.shape[0], np.kron(A, np.eye(tag.dim)))


def left_scalar_op(b: Hypercomplex, T: QuasilinearOp) -> QuasilinearOp:
    """``(bT)(x) = b (T x)``."""
    if b.tag != T.tag:
        raise TagMismatchError("scalar and operator from different algebras")
    return T._like(scalar_block(T.tag, T.n, b, "left") @ T.rep)


def right_scalar_op(b: Hypercomplex, T: QuasilinearOp) -> QuasilinearOp:
    """``(Tb)(x) = (T x) b``."""
    if b.tag != T.tag:
        raise TagMismatchError("scalar and operator from different algebras")
    return T._like(scalar_block(T.tag, T.n, b, "right") @ T.rep)


def scalar_op(tag, n: int, z: Hypercomplex) -> QuasilinearOp:
    """``zI``, with ``z`` acting by left multiplication."""
    return QuasilinearOp(tag, n, scalar_block(tag, n, z, "left"))


def adjoint(T: QuasilinearOp) -> QuasilinearOp:
    # K-adjoint equals the real adjoint, i.e. the transpose.
    return T._like(T.rep.T)


def operator_norm(T: QuasilinearOp) -> float:
    if T.rep.size == 0:
        return 0.0
    return float(np.linalg.norm(T.rep, 2))


def _scale(T: QuasilinearOp) -> float:
    return max(1.0, operator_norm(T))


def right_commutator_defect(T: QuasilinearOp) -> float:
    """``max_p ||T R_p - R_p T||`` over the generators ``i_p``."""
    worst = 0.0
    for p in range(1, T.tag.dim):
        R = scalar_block(T.tag, T.n, Hypercomplex.generator(T.tag, p), "right")
        worst = max(worst, float(np.max(np.abs(T.rep @ R - R @ T.rep))))
    return worst


def _is_right_linear(T: QuasilinearOp) -> bool:
    return right_commutator_defect(T) <= FLAG_ATOL * _scale(T)


def _is_selfadjoint(T: QuasilinearOp) -> bool:
    return float(np.max(np.abs(T.rep - T.rep.T), initial=0.0)) <= FLAG_ATOL * _scale(T)


def _is_normal(T: QuasilinearOp) -> bool:
    r = T.rep
    return float(np.linalg.norm(r @ r.T - r.T @ r, 2)) <= FLAG_ATOL * _scale(T) ** 2


def is_right_linear(T: QuasilinearOp) -> bool:
    return T.right_linear


def is_selfadjoint(T: QuasilinearOp) -> bool:
    return T.selfadjoint


def is_normal(T: QuasilinearOp) -> bool:
    return T.normal


def is_unitary(T: QuasilinearOp, atol: float = 1e-10) -> bool:
    return float(np.max(np.abs(T.rep.T @ T.rep - np.eye(T.N)), initial=0.0)) <= atol


def conjugation_op(tag, n: int) -> QuasilinearOp:
    """``x -> conj(x)`` coordinatewise: quasilinear, not right-linear."""
    tag = as_tag(tag)
    c = -np.eye(tag.dim)
    c[0, 0] = 1.0
    return QuasilinearOp(tag, n, np.kron(np.eye(n), c))


# -- components ------------------------------------------------------------------


def component_decompose(T: QuasilinearOp) -> list[np.ndarray]:
    """Real ``(n, N)`` matrices ``T_v`` with ``T(x) = sum_v T_v(x) i_v``.

    Column ``s`` of ``T_v`` is obtained by running the product-based extraction
    on the outputs ``T(e_s)`` over the real basis.
    """
    tag, n, d = T.tag, T.n, T.tag.dim
    outs = T.rep.T.reshape(T.N, n, d)  # outs[s, l] = coordinate l of T(e_s)
    comps = component_extract_batch(tag, outs.reshape(-1, d)).reshape(T.N, n, d)
    return [comps[:, :, v].T.copy() for v in range(d)]


def component_reassemble(tag, comps: Sequence[np.ndarray]) -> QuasilinearOp:
    tag = as_tag(tag)
    n, N = comps[0].shape
    rep = np.zeros((N, N))
    for v, c in enumerate(comps):
        rep[v::tag.dim, :] = c
    return QuasilinearOp(tag, n, rep)


def k_entries(T: QuasilinearOp) -> np.ndarray:
    """``(n, n, m + 1)`` array ``A[l, k] = (T e_k)_l``; reproduces ``T`` when it is right-linear."""
    d = T.tag.dim
    cols = T.rep[:, 0::d]  # T(e_k) for real unit vectors
    return cols.T.reshape(T.n, T.n, d).transpose(1, 0, 2).copy()


def component_matrices(T: QuasilinearOp, check: bool = True) -> list[np.ndarray]:
    """Real n x n matrices ``A_v`` with ``T = from_k_matrix(sum_v A_v i_v)``."""
    if check and not T.right_linear:
        raise PreconditionError("component matrices need a right-linear operator")
    ent = k_entries(T)
    return [ent[:, :, v].copy() for v in range(T.tag.dim)]


# -- complex block form (H only) -----------------------------------------------


def _require_h(T: QuasilinearOp) -> None:
    if T.tag.kind != "H":
        raise UnsupportedAlgebraError("complex block form exists only over H")


def complex_block_form(T: QuasilinearOp) -> tuple[np.ndarray, np.ndarray]:
    """``(T_1, T_2)`` complex n x n with ``A = T_1 + T_2 j`` entrywise.

    The full complex matrix is ``[[T_1, T_2], [-conj(T_2), conj(T_1)]]``
    acting on ``(u, -conj(v))`` for ``x = u + v j``.
    """
    _require_h(T)
    if not T.right_linear:
        raise PreconditionError("complex block form needs a right-linear operator")
    ent = k_entries(T)
    # a + b i + c j + d k = (a + b i) + (c + d i) j
    t1 = ent[:, :, 0] + 1j * ent[:, :, 1]
    t2 = ent[:, :, 2] + 1j * ent[:, :, 3]
    return t1, t2


def complex_block_matrix(t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
    return np.block([[t1, t2], [-t2.conj(), t1.conj()]])


def from_complex_blocks(t1: np.ndarray, t2: np.ndarray) -> QuasilinearOp:
    from .algebra import get_algebra

    tag = get_algebra("H")
    ent = np.stack([t1.real, t1.imag, t2.real, t2.imag], axis=-1)
    return from_k_matrix(tag, ent)


# -- random operators for tests and verification ---------------------------------


def random_op(tag, n: int, rng: np.random.Generator) -> QuasilinearOp:
    tag = as_tag(tag)
    N = tag.dim * n
    return QuasilinearOp(tag, n, rng.standard_normal((N, N)) / np.sqrt(N))


def random_right_linear(tag, n: int, rng: np.random.Generator) -> QuasilinearOp:
    """Over H a random quaternion matrix; over O a real matrix (the only right-linear kind)."""
    tag = as_tag(tag)
    if tag.kind == "O":
        return real_matrix_op(tag, rng.standard_normal((n, n)) / np.sqrt(n))
    return from_k_matrix(tag, rng.standard_normal((n, n, tag.dim)) / np.sqrt(n * tag.dim))


def random_selfadjoint(tag, n: int, rng: np.random.Generator, right_linear: bool = True) -> QuasilinearOp:
    T = random_right_linear(tag, n, rng) if right_linear else random_op(tag, n, rng)
    return T._like((T.rep + T.rep.T) / 2.0)


def random_slice_selfadjoint(tag, n: int, rng: np.random.Generator, M: Hypercomplex | None = None) -> QuasilinearOp:
    """Selfadjoint with entries in ``R + M R`` (complex Hermitian on the slice); real symmetric over O.

    These commute with left multiplication by ``M``, which K-valued left
    calculus needs to stay consistent.
    """
    tag = as_tag(tag)
    if tag.kind == "O":
        A = rng.standard_normal((n, n))
        return real_matrix_op(tag, (A + A.T) / (2 * np.sqrt(n)))
    if M is None:
        M = Hypercomplex.generator(tag, 1)
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2 * n)
    Z = (Z + Z.conj().T) / 2
    ent = Z.real[..., None] * np.eye(tag.dim)[0] + Z.imag[..., None] * M.coeffs
    return from_k_matrix(tag, ent)
