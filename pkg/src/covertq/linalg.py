"""Dense complex-matrix kernel: Hermitian eigendecomposition, matrix
functions on supports, tensor products, partial traces, trace norm.

The eigensolver is a cyclic Jacobi iteration with complex plane rotations.
Sweep order is deterministic (row-major over the upper triangle), so a
given matrix always produces the same spectrum object bit for bit.  All
higher modules funnel their spectral work through :func:`eig_hermitian`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Numerics
from .errors import DimMismatch, NoConvergence, NotHermitian, NotPSD

__all__ = [
    "Spectrum",
    "dagger",
    "herm_deviation",
    "require_hermitian",
    "eig_hermitian",
    "eigvals_hermitian",
    "mat_fn",
    "support_projector",
    "tensor",
    "partial_trace",
    "trace_norm",
]


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def herm_deviation(m: np.ndarray) -> float:
    """Largest entrywise deviation of ``m`` from its conjugate transpose."""
    return float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0


def require_hermitian(m: np.ndarray, tol: float, what: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimMismatch(f"{what} must be square, got shape {m.shape}")
    dev = herm_deviation(m)
    if dev > tol:
        raise NotHermitian(f"{what} deviates from Hermitian by {dev:.3e} (tol {tol:.1e})")
    return m


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a Hermitian matrix.

    ``eigenvalues`` are real and sorted ascending; ``eigenvectors`` holds
    the matching orthonormal eigenvectors as columns, so the input is
    recovered as ``V @ diag(w) @ V.conj().T``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Annihilate a[p, q] with a complex plane rotation, updating a and v."""
    apq = a[p, q]
    r = abs(apq)
    w = apq / r  # unit phase
    tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
    t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(tau, 1.0)) if tau != 0.0 else 1.0
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c
    sw = s * w
    swc = s * w.conjugate()

    colp = a[:, p].copy()
    colq = a[:, q].copy()
    a[:, p] = c * colp - swc * colq
    a[:, q] = sw * colp + c * colq
    rowp = a[p, :].copy()
    rowq = a[q, :].copy()
    a[p, :] = c * rowp - sw * rowq
    a[q, :] = swc * rowp + c * rowq
    a[p, q] = 0.0
    a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real

    colp = v[:, p].copy()
    colq = v[:, q].copy()
    v[:, p] = c * colp - swc * colq
    v[:, q] = sw * colp + c * colq


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def eig_hermitian(m: np.ndarray, cfg: Numerics = DEFAULT) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Raises :class:`NotHermitian` when the input fails the Hermiticity
    check and :class:`NoConvergence` if the off-diagonal mass has not
    collapsed after ``cfg.eig_sweeps`` sweeps (never observed below
    dimension ~100 in practice).
    """
    a = require_hermitian(m, cfg.herm_tol)
    # Force exact Hermiticity so the upper-triangle sweep controls both
    # triangles; the deviation is below herm_tol by the check above.
    a = 0.5 * (a + dagger(a))
    np.fill_diagonal(a, np.diag(a).real)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    if n == 1:
        return Spectrum(np.array([a[0, 0].real]), v)

    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return Spectrum(np.zeros(n), v)
    stop = 1e-14 * scale
    skip = 1e-18 * scale

    converged = False
    for _ in range(cfg.eig_sweeps):
        if _offdiag_norm(a) <= stop:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > skip:
                    _jacobi_rotate(a, v, p, q)
    else:
        if _offdiag_norm(a) <= stop:
            converged = True
    if not converged:
        raise NoConvergence(
            f"Jacobi iteration did not converge in {cfg.eig_sweeps} sweeps (dim {n})"
        )

    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return Spectrum(w[order], np.ascontiguousarray(v[:, order]))


def eigvals_hermitian(m: np.ndarray, cfg: Numerics = DEFAULT) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix."""
    return eig_hermitian(m, cfg).eigenvalues


def _support_cutoff(w: np.ndarray, support_tol: float) -> float:
    top = float(np.max(np.abs(w))) if w.size else 0.0
    return support_tol * top


def mat_fn(m: np.ndarray, f, support_tol: float | None = None,
           cfg: Numerics = DEFAULT) -> np.ndarray:
    """Apply a scalar function to a PSD matrix on its support.

    Eigenvalues at or below ``support_tol`` (relative to the largest
    eigenvalue magnitude) map to zero; this is the support convention that
    makes inverse powers and logarithms well defined for singular states.
    Eigenvalues in ``[-cutoff, cutoff]`` are treated as numerical zeros;
    anything below ``-cutoff`` raises :class:`NotPSD`.
    """
    if support_tol is None:
        support_tol = cfg.support_tol
    spec = eig_hermitian(m, cfg)
    w = spec.eigenvalues
    cutoff = _support_cutoff(w, support_tol)
    if w.size and w[0] < -cutoff:
        raise NotPSD(f"matrix has eigenvalue {w[0]:.3e} below -{cutoff:.3e}")
    fw = np.array([f(x) if x > cutoff else 0.0 for x in w], dtype=np.float64)
    v = spec.eigenvectors
    out = (v * fw) @ dagger(v)
    return 0.5 * (out + dagger(out))


def support_projector(m: np.ndarray, support_tol: float | None = None,
                      cfg: Numerics = DEFAULT) -> np.ndarray:
    """Orthogonal projector onto the support of a PSD matrix."""
    return mat_fn(m, lambda _x: 1.0, support_tol, cfg)


def tensor(*ms: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices."""
    out = np.asarray(ms[0], dtype=np.complex128)
    for m in ms[1:]:
        out = np.kron(out, np.asarray(m, dtype=np.complex128))
    return out


def partial_trace(m: np.ndarray, dims: list[int] | tuple[int, ...],
                  keep: list[int] | tuple[int, ...] | set[int]) -> np.ndarray:
    """Partial trace over all subsystems not listed in ``keep``.

    ``dims`` lists the subsystem dimensions in tensor order; ``keep``
    holds the indices of the subsystems to retain (order preserved).
    The full trace is preserved exactly up to float rounding.
    """
    m = np.asarray(m, dtype=np.complex128)
    dims = list(int(d) for d in dims)
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise DimMismatch(f"matrix shape {m.shape} does not match dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimMismatch(f"keep indices {keep} out of range for {len(dims)} subsystems")

    k = len(dims)
    if 2 * k > 26:
        raise DimMismatch("partial_trace supports at most 13 subsystems")
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:k])
    col = []
    nxt = k
    for i in range(k):
        if i in keep:
            col.append(letters[nxt])
            nxt += 1
        else:
            col.append(row[i])  # shared letter contracts the traced subsystem
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    resh = m.reshape(dims + dims)
    res = np.einsum("".join(row + col) + "->" + out, resh)
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(d_keep, d_keep)


def trace_norm(m: np.ndarray, cfg: Numerics = DEFAULT) -> float:
    """Trace norm of a Hermitian matrix: sum of absolute eigenvalues."""
    w = eigvals_hermitian(m, cfg)
    return float(np.sum(np.abs(w)))
