"""Photon-count probability laws over a truncated number basis.

The Born rule gives ``P(n) = |c_n|^2``.  Two deformation families stand in
for a violation of it:

* ``power_deformed``: ``P(n) ~ |c_n|^(2(1 + epsilon))``
* ``additive``: ``P(n) ~ max(0, |c_n|^2 + delta * f(n))`` with a zero-sum shape ``f``

Both are renormalized over the window.  Neither family is a physical model;
they only make the size of a violation a tunable number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fock_space import NORM_TOL, FockVector

PMF_SUM_TOL = 1e-9


class RuleError(ValueError):
    """Invalid probability rule or pmf."""


class DegenerateRuleError(RuleError):
    """A rule clamped every probability to zero."""


@dataclass(frozen=True)
class CountPMF:
    probs: np.ndarray
    label: str = ""

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise RuleError("pmf must be a non-empty 1-D array")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
            raise RuleError("pmf entries must lie in [0, 1]")
        total = math.fsum(p)
        if abs(total - 1.0) > PMF_SUM_TOL:
            raise RuleError(f"pmf sums to {total!r}, not 1")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    def __len__(self) -> int:
        return self.probs.size


def _renormalize(weights: np.ndarray, label: str) -> CountPMF:
    total = math.fsum(weights)
    if not total > 0.0:
        raise DegenerateRuleError(f"{label}: every probability is zero")
    return CountPMF(weights / total, label)


def _require_normalized(state: FockVector, tol: float = NORM_TOL) -> None:
    if not state.is_normalized(tol):
        raise RuleError(f"state is not normalized: |psi|^2 = {state.norm_sq!r}")


def born_pmf(state: FockVector) -> CountPMF:
    """``|c_n|^2`` renormalized over the truncation window."""
    _require_normalized(state)
    return _renormalize(np.abs(state.coeffs) ** 2, "born")


def poisson_pmf_oracle(mean: float, n_max: int) -> CountPMF:
    """Closed-form Poisson pmf, ``exp(n log m - m - log n!)``, renormalized over ``0..n_max``."""
    if not mean >= 0.0:
        raise RuleError(f"Poisson mean must be >= 0, got {mean!r}")
    if n_max < 0:
        raise RuleError(f"n_max must be >= 0, got {n_max}")
    if mean == 0.0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
        return CountPMF(p, "poisson")
    log_p = [k * math.log(mean) - mean - math.lgamma(k + 1) for k in range(n_max + 1)]
    return _renormalize(np.exp(np.array(log_p)), "poisson")


def pmf_moments(pmf: CountPMF) -> tuple[float, float]:
    """Mean and variance by direct summation over the window."""
    n = np.arange(pmf.probs.size, dtype=float)
    mean = math.fsum(n * pmf.probs)
    second = math.fsum(n * n * pmf.probs)
    return mean, max(second - mean * mean, 0.0)


# Perturbation shapes.  Each maps (n, Born mean) to f(n) with sum f = 0 and
# sum |f| = 1; if f cannot be made zero-sum on the window it is identically 0.
# Bins within MEAN_TIE_TOL of the mean count as "at the mean" (f = 0) so an
# integer mean such as |alpha|^2 = 4 is not split by round-off.
MEAN_TIE_TOL = 1e-9


def _split_normalize(raw: np.ndarray) -> np.ndarray:
    pos = raw > 0
    neg = raw < 0
    if not pos.any() or not neg.any():
        return np.zeros_like(raw)
    f = np.zeros_like(raw)
    f[pos] = raw[pos] / (2.0 * raw[pos].sum())
    f[neg] = -raw[neg] / (2.0 * raw[neg].sum())
    return f


def sign_shape(n: np.ndarray, born_mean: float) -> np.ndarray:
    """``sign(n - <n>)``, with each side scaled to carry half the unit mass."""
    d = n - born_mean
    return _split_normalize(np.where(np.abs(d) <= MEAN_TIE_TOL, 0.0, np.sign(d)))


def linear_shape(n: np.ndarray, born_mean: float) -> np.ndarray:
    """``n - <n>``, with each side scaled to carry half the unit mass."""
    d = n - born_mean
    return _split_normalize(np.where(np.abs(d) <= MEAN_TIE_TOL, 0.0, d))


SHAPES: dict[str, Callable[[np.ndarray, float], np.ndarray]] = {
    "sign": sign_shape,
    "linear": linear_shape,
}

RULE_KINDS = ("born", "power_deformed", "additive")


@dataclass(frozen=True)
class ProbabilityRule:
    kind: str = "born"
    epsilon: float = 0.0
    delta: float = 0.0
    shape: str = "sign"

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise RuleError(f"unknown rule kind {self.kind!r}; expected one of {RULE_KINDS}")
        if not (math.isfinite(self.epsilon) and math.isfinite(self.delta)):
            raise RuleError("epsilon and delta must be finite")
        if self.shape not in SHAPES:
            raise RuleError(f"unknown perturbation shape {self.shape!r}; expected one of {tuple(SHAPES)}")
        if self.kind == "born" and (self.epsilon != 0.0 or self.delta != 0.0):
            raise RuleError("born rule requires epsilon = 0 and delta = 0")
        if self.kind == "power_deformed" and not self.epsilon > -1.0:
            raise RuleError(f"power_deformed requires epsilon > -1, got {self.epsilon!r}")

    @classmethod
    def born(cls) -> "ProbabilityRule":
        return cls("born")

    @classmethod
    def power(cls, epsilon: float) -> "ProbabilityRule":
        return cls("power_deformed", epsilon=float(epsilon))

    @classmethod
    def additive(cls, delta: float, shape: str = "sign") -> "ProbabilityRule":
        return cls("additive", delta=float(delta), shape=shape)

    @property
    def parameter(self) -> float:
        return self.epsilon if self.kind == "power_deformed" else self.delta

    def with_parameter(self, value: float) -> "ProbabilityRule":
        if self.kind == "power_deformed":
            return ProbabilityRule.power(value)
        if self.kind == "additive":
            return ProbabilityRule.additive(value, self.shape)
        raise RuleError("born rule has no free parameter")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "epsilon": self.epsilon, "delta": self.delta, "shape": self.shape}


def apply_rule(state: FockVector, rule: ProbabilityRule) -> CountPMF:
    """Count distribution of ``state`` under ``rule``."""
    born = born_pmf(state)
    if rule.kind == "born":
        return born
    p = born.probs
    if rule.kind == "power_deformed":
        w = np.zeros_like(p)
        nz = p > 0.0
        w[nz] = np.exp((1.0 + rule.epsilon) * np.log(p[nz]))
        return _renormalize(w, "power_deformed")
    n = np.arange(p.size, dtype=float)
    born_mean, _ = pmf_moments(born)
    f = SHAPES[rule.shape](n, born_mean)
    return _renormalize(np.maximum(p + rule.delta * f, 0.0), "additive")
