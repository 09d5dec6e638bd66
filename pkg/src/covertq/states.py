"""Density matrices, classical-quantum ensembles, Kraus channels, and the
induced states of the coding problem.

Tensor factors carry explicit names ("A", "S", "Sbar", "B", "E", ...) so
partial traces are requested by name instead of positional index; the
problem setup reorders factors freely and positional bookkeeping is the
classic source of bugs here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Numerics
from .errors import DimMismatch, NotPSD
from .linalg import (
    dagger,
    eigvals_hermitian,
    partial_trace,
    require_hermitian,
    tensor,
    trace_norm,
)

Factor = tuple[str, int]

__all__ = [
    "DensityMatrix",
    "CQState",
    "QuantumChannel",
    "ProblemInstance",
    "normalize",
    "apply_channel",
    "induced_cq_output",
    "innocent_output",
    "marginals",
    "check_csi_consistency",
]


def _as_factors(factors, dim: int) -> tuple[Factor, ...]:
    if factors is None:
        return (("X", dim),)
    out = tuple((str(n), int(d)) for n, d in factors)
    if int(np.prod([d for _, d in out])) != dim:
        raise DimMismatch(f"factors {out} do not multiply to dimension {dim}")
    names = [n for n, _ in out]
    if len(set(names)) != len(names):
        raise DimMismatch(f"duplicate factor names in {names}")
    return out


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated unit-trace PSD Hermitian operator with named factors.

    Construction rejects invalid matrices instead of repairing them; use
    :func:`normalize` to project noisy data onto the state set first.
    """

    matrix: np.ndarray
    factors: tuple[Factor, ...] = field(default=None)  # type: ignore[assignment]

    def __init__(self, matrix, factors=None, *, validate: bool = True,
                 cfg: Numerics = DEFAULT):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if validate:
            matrix = require_hermitian(matrix, cfg.herm_tol, "state")
            tr = float(np.trace(matrix).real)
            if abs(tr - 1.0) > cfg.trace_tol:
                raise DimMismatch(f"state trace is {tr}, expected 1")
            w = eigvals_hermitian(matrix, cfg)
            if w[0] < -cfg.psd_tol:
                raise NotPSD(f"state has eigenvalue {w[0]:.3e}")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "factors", _as_factors(factors, matrix.shape[0]))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def factor_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.factors)

    def factor_dim(self, name: str) -> int:
        for n, d in self.factors:
            if n == name:
                return d
        raise DimMismatch(f"no factor named {name!r} in {self.factor_names}")

    def marginal(self, keep: str | list[str] | tuple[str, ...] | set[str]) -> "DensityMatrix":
        """Partial trace keeping only the named factors (in current order)."""
        if isinstance(keep, str):
            keep = [keep]
        keep = set(keep)
        unknown = keep - set(self.factor_names)
        if unknown:
            raise DimMismatch(f"unknown factors {sorted(unknown)}; have {self.factor_names}")
        idx = [i for i, (n, _) in enumerate(self.factors) if n in keep]
        dims = [d for _, d in self.factors]
        out = partial_trace(self.matrix, dims, idx)
        kept = tuple(self.factors[i] for i in idx)
        return DensityMatrix(out, kept, validate=False)


def normalize(matrix, factors=None, cfg: Numerics = DEFAULT) -> DensityMatrix:
    """Project a noisy Hermitian matrix onto the state set.

    Hermitizes, clips negative eigenvalues to zero, and rescales the trace
    to one.  This is the explicit repair path; the ``DensityMatrix``
    constructor itself never normalizes.
    """
    from .linalg import eig_hermitian

    m = np.asarray(matrix, dtype=np.complex128)
    m = 0.5 * (m + dagger(m))
    spec = eig_hermitian(m, cfg)
    w = np.maximum(spec.eigenvalues, 0.0)
    tr = float(np.sum(w))
    if tr <= 0.0:
        raise NotPSD("matrix has no positive part to normalize")
    v = spec.eigenvectors
    out = (v * (w / tr)) @ dagger(v)
    return DensityMatrix(0.5 * (out + dagger(out)), factors, validate=False)


@dataclass(frozen=True, eq=False)
class CQState:
    """Classical-quantum ensemble {p(u), rho_u} over a finite label set."""

    labels: tuple
    probs: np.ndarray
    conditionals: tuple[DensityMatrix, ...]

    def __init__(self, labels, probs, conditionals, *, validate: bool = True,
                 cfg: Numerics = DEFAULT):
        labels = tuple(labels)
        probs = np.asarray(probs, dtype=np.float64)
        conditionals = tuple(conditionals)
        if validate:
            if not (len(labels) == probs.shape[0] == len(conditionals)):
                raise DimMismatch("labels, probs, conditionals must have equal length")
            if np.any(probs < -cfg.prob_tol):
                raise NotPSD(f"negative probability {probs.min()}")
            if abs(float(probs.sum()) - 1.0) > cfg.prob_tol:
                raise DimMismatch(f"probabilities sum to {probs.sum()}, expected 1")
            dims = {c.dim for c in conditionals}
            if len(dims) > 1:
                raise DimMismatch(f"conditionals have mixed dimensions {sorted(dims)}")
            facs = {c.factors for c in conditionals}
            if len(facs) > 1:
                raise DimMismatch("conditionals have mixed factor structures")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "conditionals", conditionals)

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    @property
    def quantum_dim(self) -> int:
        return self.conditionals[0].dim

    @property
    def quantum_factors(self) -> tuple[Factor, ...]:
        return self.conditionals[0].factors

    def average(self) -> DensityMatrix:
        """Ensemble average sum_u p(u) rho_u."""
        acc = np.zeros((self.quantum_dim, self.quantum_dim), dtype=np.complex128)
        for p, c in zip(self.probs, self.conditionals):
            if p > 0.0:
                acc += p * c.matrix
        return DensityMatrix(acc, self.quantum_factors, validate=False)

    def joint_matrix(self) -> np.ndarray:
        """Block-diagonal matrix sum_u p(u) |u><u| (x) rho_u."""
        d = self.quantum_dim
        n = self.num_labels
        out = np.zeros((n * d, n * d), dtype=np.complex128)
        for i, (p, c) in enumerate(zip(self.probs, self.conditionals)):
            out[i * d:(i + 1) * d, i * d:(i + 1) * d] = p * c.matrix
        return out

    def joint_factors(self) -> tuple[Factor, ...]:
        return (("U", self.num_labels),) + self.quantum_factors

    def label_state(self) -> DensityMatrix:
        """diag(p_U) on the classical register."""
        return DensityMatrix(np.diag(self.probs.astype(np.complex128)),
                             (("U", self.num_labels),), validate=False)

    def marginal_cq(self, keep) -> "CQState":
        """Same ensemble with each conditional reduced to the named factors."""
        return CQState(self.labels, self.probs,
                       tuple(c.marginal(keep) for c in self.conditionals),
                       validate=False)


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Completely positive trace-preserving map in Kraus form."""

    kraus: tuple[np.ndarray, ...]
    in_factors: tuple[Factor, ...]
    out_factors: tuple[Factor, ...]

    def __init__(self, kraus, in_factors=None, out_factors=None, *,
                 validate: bool = True, cfg: Numerics = DEFAULT):
        kraus = tuple(np.asarray(k, dtype=np.complex128) for k in kraus)
        if not kraus:
            raise DimMismatch("channel requires at least one Kraus operator")
        d_out, d_in = kraus[0].shape
        if any(k.shape != (d_out, d_in) for k in kraus):
            raise DimMismatch("Kraus operators have inconsistent shapes")
        if validate:
            acc = np.zeros((d_in, d_in), dtype=np.complex128)
            for k in kraus:
                acc += dagger(k) @ k
            dev = float(np.max(np.abs(acc - np.eye(d_in))))
            if dev > cfg.herm_tol:
                raise NotPSD(f"channel is not trace preserving: |sum K^dag K - I| = {dev:.3e}")
        object.__setattr__(self, "kraus", kraus)
        object.__setattr__(self, "in_factors", _as_factors(in_factors, d_in))
        object.__setattr__(self, "out_factors", _as_factors(out_factors, d_out))

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def apply_matrix(self, m: np.ndarray) -> np.ndarray:
        out = np.zeros((self.dim_out, self.dim_out), dtype=np.complex128)
        for k in self.kraus:
            out += k @ m @ dagger(k)
        return out


def apply_channel(ch: QuantumChannel, rho: DensityMatrix, *,
                  validate: bool = True, cfg: Numerics = DEFAULT) -> DensityMatrix:
    """Channel output state N(rho)."""
    if rho.dim != ch.dim_in:
        raise DimMismatch(f"state dim {rho.dim} != channel input dim {ch.dim_in}")
    return DensityMatrix(ch.apply_matrix(rho.matrix), ch.out_factors,
                         validate=validate, cfg=cfg)


def induced_cq_output(ch: QuantumChannel, cq: CQState, *,
                      cfg: Numerics = DEFAULT) -> CQState:
    """Push every conditional of a cq ensemble through the channel."""
    if cq.quantum_dim != ch.dim_in:
        raise DimMismatch(f"conditional dim {cq.quantum_dim} != channel input {ch.dim_in}")
    outs = tuple(apply_channel(ch, c, validate=False, cfg=cfg) for c in cq.conditionals)
    return CQState(cq.labels, cq.probs, outs, validate=False)


def marginals(cq: CQState, keep) -> CQState | DensityMatrix:
    """Reduce a cq ensemble to the named factors.

    ``keep`` containing "U" plus quantum names yields the reduced cq
    ensemble; {"U"} alone yields diag(p_U); quantum names alone yield the
    averaged quantum marginal.
    """
    if isinstance(keep, str):
        keep = [keep]
    keep = set(keep)
    if keep == {"U"}:
        return cq.label_state()
    quantum = keep - {"U"}
    reduced = cq.marginal_cq(quantum)
    if "U" in keep:
        return reduced
    return reduced.average()


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Channel, innocent input, and shared channel-state description.

    ``csi`` is either the bipartite state on (Sbar, S) or directly its
    S-marginal; only the S-marginal enters any computation here, the
    purifying half is absorbed into the encoder penalty term.
    """

    channel: QuantumChannel
    innocent: DensityMatrix
    csi: DensityMatrix

    def __init__(self, channel: QuantumChannel, innocent: DensityMatrix,
                 csi: DensityMatrix):
        names = channel.in_factors
        if len(names) != 2:
            raise DimMismatch("channel input must carry two factors (A, S)")
        if len(channel.out_factors) != 2:
            raise DimMismatch("channel output must carry two factors (B, E)")
        d_a = names[0][1]
        d_s = names[1][1]
        if innocent.dim != d_a:
            raise DimMismatch(f"innocent state dim {innocent.dim} != A dim {d_a}")
        if "S" in csi.factor_names:
            if csi.factor_dim("S") != d_s:
                raise DimMismatch("csi S factor dim does not match channel")
        elif csi.dim != d_s:
            raise DimMismatch(f"csi dim {csi.dim} != S dim {d_s}")
        object.__setattr__(self, "channel", channel)
        object.__setattr__(self, "innocent", innocent)
        object.__setattr__(self, "csi", csi)

    def csi_marginal(self) -> DensityMatrix:
        """The S-marginal of the shared channel state."""
        if set(self.csi.factor_names) >= {"S"} and len(self.csi.factors) > 1:
            return self.csi.marginal("S")
        return self.csi


def innocent_output(inst: ProblemInstance, cfg: Numerics = DEFAULT) -> DensityMatrix:
    """Warden state in the no-communication mode.

    The channel is fed the innocent input tensored with the S-marginal of
    the shared state, and the legitimate receiver's factor is traced out.
    """
    rho_s = inst.csi_marginal()
    joint_in = tensor(inst.innocent.matrix, rho_s.matrix)
    out = inst.channel.apply_matrix(joint_in)
    dims = [d for _, d in inst.channel.out_factors]
    e_name = inst.channel.out_factors[1][0]
    red = partial_trace(out, dims, [1])
    return DensityMatrix(red, ((e_name, dims[1]),), validate=False, cfg=cfg)


def check_csi_consistency(cq_uas: CQState, inst: ProblemInstance,
                          tol: float | None = None,
                          cfg: Numerics = DEFAULT) -> tuple[bool, float]:
    """Compare the ensemble's S-marginal with the shared-state S-marginal.

    Returns ``(ok, deviation)`` where deviation is the trace distance
    between the two marginals.
    """
    if tol is None:
        tol = cfg.csi_tol
    s_ens = marginals(cq_uas, {"S"})
    s_csi = inst.csi_marginal()
    if s_ens.dim != s_csi.dim:
        raise DimMismatch("S marginals have different dimensions")
    dev = trace_norm(s_ens.matrix - s_csi.matrix, cfg)
    return (dev <= tol, float(dev))
