"""Closed-form reference curves for the Davies–Swanson oscillator.

The oscillator is Ĥ = (ω0/2)(p̂² + q̂²) − (iδ/2)(p̂q̂ + q̂p̂) with ω0, δ > 0,
i.e. the quadratic symbol ½ z·Hz with H = [[ω0, −iδ], [−iδ, ω0]] in the
(p, q) ordering.  With ω = √(ω0² + δ²) everything is elementary:

    S_t   = cos(tω) Id + (sin(tω)/ω) ΩH
    n_t⁻² = 1 − (δ²/ω²)(1 − cos 2tω)
    e^β_t = ω^{−1/2} (ω0² + δ² cos 2ωt)^{1/4}
    m_t   = (2δ/ω) n_t² sin(tω) ((ω0/ω) sin(tω) + i cos(tω))
    T     = ∞ if ω0 > δ, else (1/2ω) arccos(−ω0²/δ²)

for the initial frame l₀ = (1, −i).  Norm curves for the k-th excited state
follow from the univariate recursion q_{j+1} = x q_j − m_t · j · q_{j−1}
composed with x → n_t x:  ‖U(t)φ_k(l₀)‖ = e^{β_t} (Σ_j |a_j|²)^{1/2} with
a_j = c_j n_t^j √(j!)/√(k!).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, OutsideHorizon
from .symplectic import (
    LagrangianFrame,
    NormalisedFrame,
    hermitian_pairing,
    metric_and_structure,
    omega,
)

ALPHA_MAX = 32

L0 = np.array([1.0, -1.0j])


@dataclass(frozen=True)
class SwansonParams:
    """Oscillator parameters; omega = √(omega0² + delta²) is derived."""

    omega0: float
    delta: float

    def __post_init__(self):
        if not (self.omega0 > 0 and np.isfinite(self.omega0)):
            raise DimensionMismatch("omega0 must be finite and positive")
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise DimensionMismatch("delta must be finite and positive")

    @property
    def omega(self) -> float:
        return math.hypot(self.omega0, self.delta)

    def matrix(self) -> np.ndarray:
        """The coefficient matrix H = [[ω0, −iδ], [−iδ, ω0]]."""
        return np.array(
            [[self.omega0, -1j * self.delta], [-1j * self.delta, self.omega0]]
        )


@dataclass(frozen=True)
class SwansonStateScalars:
    """Closed-form state of the oscillator at one time."""

    t: float
    n: float
    beta: float
    m: complex
    l: NormalisedFrame
    metric: np.ndarray


def ds_flow(params: SwansonParams, t: float) -> np.ndarray:
    """S_t = cos(tω) Id + (sin(tω)/ω) ΩH."""
    w = params.omega
    om = omega(1)
    return math.cos(t * w) * np.eye(2) + math.sin(t * w) / w * (om @ params.matrix())


def ds_positivity_time(params: SwansonParams) -> float:
    """Horizon T = (1/2ω) arccos(−ω0²/δ²); infinite when ω0 > δ.

    The boundary ω0 = δ counts as finite: arccos(−1) = π gives T = π/(2ω).
    """
    if params.omega0 > params.delta:
        return math.inf
    ratio = -(params.omega0**2) / params.delta**2
    return math.acos(max(ratio, -1.0)) / (2 * params.omega)


def ds_scalars(params: SwansonParams, t: float) -> SwansonStateScalars:
    """All closed-form scalars at time t (raises OutsideHorizon past T)."""
    horizon = ds_positivity_time(params)
    if abs(t) >= horizon:
        raise OutsideHorizon(f"t = {t:.9g} is at or beyond the horizon T = {horizon:.9g}")
    w = params.omega
    d = params.delta
    w0 = params.omega0
    n_inv_sq = 1.0 - (d**2 / w**2) * (1.0 - math.cos(2 * t * w))
    n = 1.0 / math.sqrt(n_inv_sq)
    beta = 0.25 * math.log(w0**2 + d**2 * math.cos(2 * w * t)) - 0.5 * math.log(w)
    s = math.sin(t * w)
    m = (2 * d / w) * n**2 * s * complex((w0 / w) * s, math.cos(t * w))
    l_t = n * (ds_flow(params, t) @ L0)
    frame = NormalisedFrame(LagrangianFrame(l_t.reshape(2, 1)))
    pairing = complex(hermitian_pairing(l_t, l_t))
    if abs(pairing - 1.0) > 1e-12:
        raise OutsideHorizon(f"normalization cross-check failed: h(l,l) = {pairing}")
    metric = metric_and_structure(frame).G
    return SwansonStateScalars(t=float(t), n=n, beta=beta, m=m, l=frame, metric=metric)


def ds_norm(params: SwansonParams, k: int, t: float) -> float:
    """Closed-form ‖U(t)φ_k(l₀)‖ from the scaled-Hermite recursion.

    For k = 0, 1, 2 this reduces to e^β, e^β n, e^β √(n⁴ + |m|²/2).
    """
    k = int(k)
    if k < 0 or k > ALPHA_MAX:
        raise DimensionMismatch(f"k must lie in [0, {ALPHA_MAX}]")
    scalars = ds_scalars(params, t)
    n, m, beta = scalars.n, scalars.m, scalars.beta
    # monomial coefficients of q_k: q_{j+1} = x q_j − m j q_{j−1}
    prev = {0: 1.0 + 0j}
    current = prev
    for j in range(k):
        nxt: dict[int, complex] = {}
        for power, coeff in current.items():
            nxt[power + 1] = nxt.get(power + 1, 0j) + coeff
        if j >= 1:
            for power, coeff in prev.items():
                nxt[power] = nxt.get(power, 0j) - m * j * coeff
        prev, current = current, nxt
    fact_k = math.factorial(k)
    terms = [
        abs(coeff) ** 2 * n ** (2 * power) * math.factorial(power) / fact_k
        for power, coeff in current.items()
    ]
    return math.exp(beta) * math.sqrt(math.fsum(terms))
