"""Similarity-order transforms of embedding matrices.

For an embedding matrix ``X`` with gram matrix ``X^T X = Q diag(lam) Q^T``
the transform ``W_alpha = Q diag(lam)^alpha`` gives embeddings ``X W_alpha``
whose dot-product similarity matrix equals ``(X X^T)^n`` with
``n = 2 alpha + 1``.  ``alpha = 0`` is a pure rotation; negative values lower
the similarity order.

The ``V x V`` similarity matrix is never built here except by the small
dense helpers :func:`similarity_matrix` / :func:`nth_order_similarity`,
which exist for checking results on toy inputs.
"""
from __future__ import annotations

import logging
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .embeddings import EmbeddingMatrix

logger = logging.getLogger(__name__)

GRAM_CHUNK_ROWS = 65536
DEFAULT_EIG_FLOOR = 1e-10
NEGATIVE_EIG_TOLERANCE = 1e-8
BASIS_MAGIC = b"SOEIGB01"


class EigenConvergenceError(RuntimeError):
    """The eigensolver ran out of iterations."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (off-diagonal residual {residual:.3e})")
        self.residual = residual


# -- gram matrix ---------------------------------------------------------------


def _reduce_in_order(partials: Iterable[np.ndarray], d: int) -> np.ndarray:
    g = np.zeros((d, d))
    for p in partials:
        g += p
    return (g + g.T) / 2


def gram(emb: EmbeddingMatrix | np.ndarray, chunk_rows: int = GRAM_CHUNK_ROWS,
         workers: int = 1) -> np.ndarray:
    """``X^T X`` accumulated over fixed row chunks, exactly symmetric.

    Partial products may be computed by several threads but are always
    summed in chunk order, so the result does not depend on ``workers``.
    """
    x = emb.data if isinstance(emb, EmbeddingMatrix) else np.asarray(emb, dtype=np.float64)
    if x.shape[0] < 1:
        raise ValueError("gram matrix of an empty embedding set")
    bounds = [(s, min(s + chunk_rows, x.shape[0])) for s in range(0, x.shape[0], chunk_rows)]

    def partial(b):
        block = x[b[0]:b[1]]
        return block.T @ block

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return _reduce_in_order(pool.map(partial, bounds), x.shape[1])
    return _reduce_in_order(map(partial, bounds), x.shape[1])


def gram_streamed(blocks: Iterable[np.ndarray]) -> tuple[np.ndarray, int]:
    """Gram matrix of row blocks streamed from disk; returns ``(G, rows)``.

    Gives bit-identical results to :func:`gram` when the blocks have the same
    boundaries (``iter_unique_chunks`` uses ``GRAM_CHUNK_ROWS`` by default).
    """
    g = None
    rows = 0
    for block in blocks:
        block = np.asarray(block, dtype=np.float64)
        if g is None:
            g = np.zeros((block.shape[1], block.shape[1]))
        g += block.T @ block
        rows += block.shape[0]
    if g is None:
        raise ValueError("gram matrix of an empty embedding set")
    return (g + g.T) / 2, rows


# -- eigendecomposition --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Eigenvectors ``q`` (as columns) and descending eigenvalues ``lam``."""

    q: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=np.float64)
        lam = np.array(self.lam, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or lam.shape != (q.shape[0],):
            raise ValueError(f"inconsistent basis shapes {q.shape} and {lam.shape}")
        q.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "lam", lam)

    @property
    def source_dim(self) -> int:
        return self.q.shape[0]

    @property
    def lam_max(self) -> float:
        return float(self.lam[0]) if self.lam.size else 0.0

    @classmethod
    def identity(cls, lam) -> "EigenBasis":
        lam = np.asarray(lam, dtype=np.float64)
        return cls(np.eye(lam.size), lam)

    def orthogonality_residual(self) -> float:
        return float(np.max(np.abs(self.q.T @ self.q - np.eye(self.source_dim))))

    def reconstruction_residual(self, g: np.ndarray) -> float:
        """``max |Q diag(lam) Q^T - g|`` relative to ``max |g|``."""
        rec = (self.q * self.lam) @ self.q.T
        peak = float(np.max(np.abs(g)))
        err = float(np.max(np.abs(rec - g)))
        return err / peak if peak > 0 else err


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _jacobi(a: np.ndarray, max_sweeps: int, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations; returns unsorted ``(eigenvalues, eigenvectors)``."""
    a = a.copy()
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = _off_norm(a)
        if off <= tol * scale:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * math.sqrt(abs(a[p, p] * a[q, q])):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    off = _off_norm(a)
    if off <= tol * scale:
        return np.diag(a).copy(), v
    raise EigenConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps", off / scale)


def _canonical_signs(q: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column positive; argmax picks the lowest index on ties
    pivots = np.argmax(np.abs(q), axis=0)
    signs = np.sign(q[pivots, np.arange(q.shape[1])])
    signs[signs == 0] = 1.0
    return q * signs


def sym_eig(g: np.ndarray, method: str = "lapack", max_sweeps: int = 100,
            tol: float = 1e-14) -> EigenBasis:
    """Eigendecomposition of a symmetric positive semidefinite matrix.

    Eigenvalues come out descending, each eigenvector's largest-magnitude
    component is positive, and round-off negatives are clamped to zero.

    ``method`` is ``"lapack"`` (``numpy.linalg.eigh``) or ``"jacobi"``
    (cyclic Jacobi rotations, slow but dependency free).
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {g.shape}")
    peak = float(np.max(np.abs(g))) if g.size else 0.0
    asym = float(np.max(np.abs(g - g.T))) if g.size else 0.0
    if asym > 1e-12 * peak:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    g = (g + g.T) / 2
    if method == "lapack":
        try:
            lam, q = np.linalg.eigh(g)
        except np.linalg.LinAlgError as exc:
            off = float(np.linalg.norm(g - np.diag(np.diag(g))))
            raise EigenConvergenceError(f"eigh failed: {exc}", off) from exc
    elif method == "jacobi":
        lam, q = _jacobi(g, max_sweeps, tol)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(-lam, kind="stable")
    lam, q = lam[order], q[:, order]
    q = _canonical_signs(q)
    lam_max = max(float(lam[0]), 0.0) if lam.size else 0.0
    if lam.size and lam[-1] < -NEGATIVE_EIG_TOLERANCE * lam_max:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {lam[-1]:.3e})")
    lam = np.maximum(lam, 0.0)
    return EigenBasis(q, lam)


def save_basis(basis: EigenBasis, path) -> None:
    """Flat little-endian record: magic, d (uint64), Q column-major, eigenvalues."""
    d = basis.source_dim
    with open(path, "wb") as fh:
        fh.write(BASIS_MAGIC)
        fh.write(struct.pack("<Q", d))
        fh.write(np.asarray(basis.q, dtype="<f8").ravel(order="F").tobytes())
        fh.write(np.asarray(basis.lam, dtype="<f8").tobytes())


def load_basis(path) -> EigenBasis:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:len(BASIS_MAGIC)] != BASIS_MAGIC:
        raise ValueError(f"{path}: not an eigenbasis file")
    off = len(BASIS_MAGIC)
    (d,) = struct.unpack_from("<Q", raw, off)
    off += 8
    if len(raw) != off + 8 * (d * d + d):
        raise ValueError(f"{path}: truncated eigenbasis file")
    q = np.frombuffer(raw, dtype="<f8", count=d * d, offset=off).reshape((d, d), order="F")
    lam = np.frombuffer(raw, dtype="<f8", count=d, offset=off + 8 * d * d)
    return EigenBasis(q.astype(np.float64), lam.astype(np.float64))


# -- transforms ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransformSpec:
    """``W_alpha = Q diag(lam_eff)^alpha`` with ``lam_eff = max(lam, floor * lam_max)``."""

    basis: EigenBasis
    alpha: float
    eig_floor: float = DEFAULT_EIG_FLOOR

    @property
    def order(self) -> float:
        """Similarity order ``n`` reached by this transform."""
        return 2 * self.alpha + 1

    @cached_property
    def effective_eigenvalues(self) -> np.ndarray:
        return np.maximum(self.basis.lam, self.eig_floor * self.basis.lam_max)

    @property
    def n_clamped(self) -> int:
        return int(np.sum(self.basis.lam < self.eig_floor * self.basis.lam_max))

    @cached_property
    def scale(self) -> np.ndarray:
        """Per-column factors ``lam_eff ** alpha``."""
        return self.effective_eigenvalues ** self.alpha

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.basis.q * self.scale


def make_transform(basis: EigenBasis, alpha: float,
                   eig_floor: float = DEFAULT_EIG_FLOOR) -> TransformSpec:
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise ValueError(f"alpha must be finite, got {alpha}")
    if not 0 <= eig_floor < 1:
        raise ValueError(f"eig_floor must be in [0, 1), got {eig_floor}")
    if basis.lam_max <= 0.0:
        raise ValueError("all eigenvalues are zero; the embeddings carry no signal")
    t = TransformSpec(basis, alpha, eig_floor)
    if not np.all(np.isfinite(t.scale)):
        raise ValueError(f"alpha={alpha} overflows the eigenvalue scaling")
    return t


def _check_dim(emb: EmbeddingMatrix, basis: EigenBasis):
    if emb.dim != basis.source_dim:
        raise ValueError(f"dimension mismatch: embeddings have d={emb.dim}, "
                         f"basis was built for d={basis.source_dim}")


def apply_transform(emb: EmbeddingMatrix, t: TransformSpec) -> EmbeddingMatrix:
    """``X W_alpha``; vocabulary and dimension are unchanged."""
    _check_dim(emb, t.basis)
    return emb.with_data(emb.data @ t.matrix)


def precompute_rotated(emb: EmbeddingMatrix, basis: EigenBasis) -> EmbeddingMatrix:
    """``X Q``, after which every ``X W_alpha`` is a column scaling."""
    _check_dim(emb, basis)
    return emb.with_data(emb.data @ basis.q)


def scale_rotated(rotated: EmbeddingMatrix, t: TransformSpec) -> EmbeddingMatrix:
    """Fast path: ``(X Q) diag(lam_eff ** alpha)``."""
    _check_dim(rotated, t.basis)
    return rotated.with_data(rotated.data * t.scale)


def fit_transform(emb: EmbeddingMatrix, alpha: float,
                  eig_floor: float = DEFAULT_EIG_FLOOR) -> EmbeddingMatrix:
    """Build ``W_alpha`` from ``emb``'s own gram matrix and apply it."""
    basis = sym_eig(gram(emb))
    return apply_transform(emb, make_transform(basis, alpha, eig_floor))


# -- similarities --------------------------------------------------------------


def pairwise_similarity(emb: EmbeddingMatrix, i: int, j: int, metric: str = "dot") -> float:
    n = len(emb)
    for k in (i, j):
        if not 0 <= k < n:
            raise IndexError(f"row id {k} out of range for {n} rows")
    xi, xj = emb.data[i], emb.data[j]
    if metric == "dot":
        return float(xi @ xj)
    if metric == "cosine":
        ni, nj = np.linalg.norm(xi), np.linalg.norm(xj)
        if ni == 0.0 or nj == 0.0:
            return 0.0
        return float((xi / ni) @ (xj / nj))
    raise ValueError(f"unknown metric {metric!r}")


def similarity_matrix(x) -> np.ndarray:
    """Dense ``X X^T`` -- only for small inputs."""
    x = x.data if isinstance(x, EmbeddingMatrix) else np.asarray(x, dtype=np.float64)
    return x @ x.T


def nth_order_similarity(x, n: int) -> np.ndarray:
    """Dense ``(X X^T)^n`` by repeated multiplication -- only for small inputs."""
    if n < 1:
        raise ValueError("similarity order must be >= 1")
    m = similarity_matrix(x)
    out = m
    for _ in range(n - 1):
        out = out @ m
    return out
