"""Single-mode Fock space truncated at ``n_max``.

States are complex coefficient vectors over the photon-number basis
``|0>, |1>, ..., |n_max>``.  Operators are dense matrices in the same basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

NORM_TOL = 1e-9
TRUNC_TOL = 1e-10


class FockSpaceError(ValueError):
    """Rejected input to a Fock-space operation."""


class OperatorKind(str, Enum):
    ANNIHILATION = "annihilation"
    CREATION = "creation"
    NUMBER = "number"
    QUADRATURE = "quadrature"
    CUSTOM = "custom"


def as_amplitude(alpha) -> complex:
    """Coerce ``alpha`` to a finite complex number."""
    try:
        z = complex(alpha)
    except (TypeError, ValueError) as exc:
        raise FockSpaceError(f"not a complex amplitude: {alpha!r}") from exc
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise FockSpaceError(f"amplitude must be finite, got {z!r}")
    return z


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FockVector:
    """Coefficients ``c_n`` for ``n = 0..n_max``.

    ``truncation_deficit`` is the probability mass beyond ``n_max`` for states
    built from an infinite expansion (zero for states defined on the window).
    """

    coeffs: np.ndarray
    truncation_deficit: float = 0.0
    trunc_tol: float = TRUNC_TOL

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise FockSpaceError("coefficients must be a non-empty 1-D array")
        if not np.all(np.isfinite(c)):
            raise FockSpaceError("coefficients must be finite")
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def n_max(self) -> int:
        return self.coeffs.size - 1

    @property
    def dim(self) -> int:
        return self.coeffs.size

    @property
    def norm_sq(self) -> float:
        return math.fsum(np.abs(self.coeffs) ** 2)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_sq - 1.0) <= tol

    @property
    def truncation_ok(self) -> bool:
        """False when ``n_max`` is too small for the requested ``trunc_tol``."""
        return self.truncation_deficit <= self.trunc_tol

    def __mul__(self, scalar) -> "FockVector":
        return FockVector(self.coeffs * complex(scalar), self.truncation_deficit, self.trunc_tol)

    __rmul__ = __mul__

    def __sub__(self, other: "FockVector") -> "FockVector":
        _check_dims(self.dim, other.dim)
        return FockVector(self.coeffs - other.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def fock_state(n: int, n_max: int) -> FockVector:
    """Number state ``|n>`` in a window of size ``n_max + 1``."""
    if not 0 <= n <= n_max:
        raise FockSpaceError(f"need 0 <= n <= n_max, got n={n}, n_max={n_max}")
    c = np.zeros(n_max + 1, dtype=complex)
    c[n] = 1.0
    return FockVector(c)


def vacuum(n_max: int) -> FockVector:
    return fock_state(0, n_max)


def default_n_max(alpha) -> int:
    """Truncation ``ceil(|a|^2 + 10|a| + 20)``; keeps the Poisson tail below ~1e-10."""
    r = abs(as_amplitude(alpha))
    return int(math.ceil(r * r + 10.0 * r + 20.0))


def _log_magnitudes(r: float, count: int) -> np.ndarray:
    """``log|c_n|`` for n < count via the recurrence log c_{n+1} = log c_n + log r - log(n+1)/2."""
    steps = np.empty(count)
    steps[0] = -0.5 * r * r
    if count > 1:
        n1 = np.arange(1, count, dtype=float)
        steps[1:] = math.log(r) - 0.5 * np.log(n1)
    return np.cumsum(steps)


def _tail_mass(r: float, n_max: int) -> float:
    """Poisson mass above ``n_max``, summed term by term from the same recurrence."""
    if r == 0.0:
        return 0.0
    mean = r * r
    log_p = 2.0 * float(_log_magnitudes(r, n_max + 2)[-1])
    n = n_max + 1
    terms = []
    while True:
        p = math.exp(log_p)
        terms.append(p)
        if n > mean and (p == 0.0 or p < 1e-18 * math.fsum(terms)):
            break
        n += 1
        log_p += 2.0 * math.log(r) - math.log(n)
    return math.fsum(terms)


def coherent_state(alpha, n_max: int | None = None, trunc_tol: float = TRUNC_TOL) -> FockVector:
    """Coherent state ``|alpha>`` truncated at ``n_max``.

    Coefficients are ``exp(-|a|^2/2) a^n / sqrt(n!)``, evaluated by the
    multiplicative recurrence in log-magnitude form so neither the prefactor
    nor the factorial overflows.  The returned vector carries the truncation
    deficit ``1 - sum |c_n|^2``; ``truncation_ok`` is False when it exceeds
    ``trunc_tol`` and the caller decides whether to proceed.
    """
    a = as_amplitude(alpha)
    if n_max is None:
        n_max = default_n_max(a)
    if n_max < 0:
        raise FockSpaceError(f"n_max must be >= 0, got {n_max}")
    r = abs(a)
    c = np.zeros(n_max + 1, dtype=complex)
    if r == 0.0:
        c[0] = 1.0
        return FockVector(c, 0.0, trunc_tol)
    mags = np.exp(_log_magnitudes(r, n_max + 1))
    phases = np.exp(1j * math.atan2(a.imag, a.real) * np.arange(n_max + 1))
    c = mags * phases
    return FockVector(c, _tail_mass(r, n_max), trunc_tol)


def coherent_coefficients(alpha, n_max: int) -> FockVector:
    return coherent_state(alpha, n_max)


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise FockSpaceError(f"dimension mismatch: {a} vs {b}")


@dataclass(frozen=True)
class ModeOperator:
    matrix: np.ndarray
    kind: OperatorKind = OperatorKind.CUSTOM

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise FockSpaceError(f"operator matrix must be square, got shape {m.shape}")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "kind", OperatorKind(self.kind))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_max(self) -> int:
        return self.dim - 1

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol)


def _annihilation(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1).astype(complex)


def build_operator(kind, n_max: int) -> ModeOperator:
    """Truncated single-mode operator of the given kind.

    The truncated creation operator maps ``|n_max>`` to zero, so identities
    involving ``a^dagger`` only hold for states with negligible weight at
    the top of the window.
    """
    if n_max < 0:
        raise FockSpaceError(f"n_max must be >= 0, got {n_max}")
    try:
        kind = OperatorKind(kind)
    except ValueError as exc:
        raise FockSpaceError(f"unknown operator kind {kind!r}") from exc
    a = _annihilation(n_max)
    if kind is OperatorKind.ANNIHILATION:
        m = a
    elif kind is OperatorKind.CREATION:
        m = a.conj().T
    elif kind is OperatorKind.NUMBER:
        m = np.diag(np.arange(n_max + 1, dtype=float)).astype(complex)
    elif kind is OperatorKind.QUADRATURE:
        m = a + a.conj().T
    else:
        raise FockSpaceError("custom operators are built with ModeOperator(matrix)")
    return ModeOperator(m, kind)


def apply_operator(op: ModeOperator, state: FockVector) -> FockVector:
    """``op |state>``; the result is generally unnormalized."""
    _check_dims(op.dim, state.dim)
    return FockVector(op.matrix @ state.coeffs)


def expectation(state: FockVector, op: ModeOperator, norm_tol: float = NORM_TOL) -> complex:
    """``<state|op|state>``.

    For Hermitian operators the imaginary part is round-off and the real part
    is the value; both are returned.
    """
    _check_dims(op.dim, state.dim)
    if not state.is_normalized(norm_tol):
        raise FockSpaceError(f"state is not normalized: |psi|^2 = {state.norm_sq!r}")
    c = state.coeffs
    return complex(np.vdot(c, op.matrix @ c))


def eigen_residual(alpha, state: FockVector | None = None) -> float:
    """``|| a|alpha> - alpha|alpha> ||`` for the truncated coherent state."""
    a = as_amplitude(alpha)
    if state is None:
        state = coherent_state(a)
    lowered = apply_operator(build_operator(OperatorKind.ANNIHILATION, state.n_max), state)
    return (lowered - a * state).norm()
