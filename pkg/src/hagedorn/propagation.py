"""Non-Hermitian time evolution of Hagedorn wavepackets.

One augmented adaptive-RK state carries the flow matrix S_t (Ṡ = ΩH_tS),
the Riccati metric G_t, the real center z_t, the gain/loss exponent
β_t = −¼∫tr(G_τ⁻¹Im H_τ)dτ, the complex action α_t = ∫(q̇·p − ℋ_τ(z_τ))dτ,
and the continuously tracked log det Q of the un-normalized frame S_tZ₀.
Per output time the frame is re-normalized, Z_t = S_tZ₀N_t with
N_t = ((1/2i)(S_tZ₀)*Ω(S_tZ₀))^{−1/2}, and the recursion matrices
M_t = ¼(S_tZ̄₀)ᵀG_t(S_tZ̄₀) and M̃_t = M_t + N_tQ_t⁻¹Q̄_tN̄_t are assembled.
Positivity of the evolved frame is monitored by a terminal event; breakdown
raises PositivityLost with the horizon time.

The polynomial recursion with M_t, composed with x → N_t x, yields the
activation coefficients a_k (only |k| ≤ |α| with |α|−|k| even appear), so
U(t)φ_α = e^{iα_t/ε + β_t} Σ_k a_k φ_k(Z_t, z_t) with a_k = c_k √(k!)/√(α!).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import (
    ConsistencyError,
    DimensionMismatch,
    NonSymmetricH,
    PositivityLost,
    StepSizeUnderflow,
)
from .polynomials import MultiPoly, poly_recursion, validate_multi_index
from .symplectic import (
    POS_TOL,
    TOL_FRAME,
    LagrangianFrame,
    NormalisedFrame,
    SymplecticMetricPair,
    gram_matrix,
    hermitian_inv_sqrt,
    metric_and_structure,
    normalise_frame,
    omega,
)
from .wavepackets import ALPHA_MAX, Grid, WavepacketParams, eval_excited, eval_ground

ODE_TOL = 1e-10

# Failsafe floor for the joint integration near a positivity breakdown: the
# Riccati block grows like 1/min_eig there and its rhs roundoff like |G|², so
# the stepper stalls once min_eig drops to roughly ode_tol/machine_eps.  The
# horizon itself is located by the regular flow-only scan, not by this event.
HORIZON_EIG_FLOOR = 1e-4


def _check_symmetric(H: np.ndarray, label: str = "H") -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    n2 = H.shape[0]
    if H.ndim != 2 or H.shape != (n2, n2) or n2 % 2 != 0:
        raise NonSymmetricH(f"{label} must be a 2n×2n matrix, got {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H - H.T)) > TOL_FRAME * scale:
        raise NonSymmetricH(f"{label} is not symmetric")
    return 0.5 * (H + H.T)


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """Time-dependent complex symmetric coefficient matrix H_t.

    kind "constant": H(t) = matrix; "sampled": linear interpolation between
    sample times; "polynomial": H(t) = Σ_k C_k t^k from a coefficient stack.
    """

    kind: str
    data: tuple = field(repr=False)

    @staticmethod
    def constant(H) -> "QuadraticHamiltonian":
        return QuadraticHamiltonian(kind="constant", data=(_check_symmetric(H),))

    @staticmethod
    def sampled(times, matrices) -> "QuadraticHamiltonian":
        times = np.asarray(times, dtype=float)
        stack = np.stack([_check_symmetric(m) for m in matrices])
        if times.ndim != 1 or len(times) != len(stack) or len(times) < 2:
            raise NonSymmetricH("sampled form needs matching times and ≥ 2 matrices")
        if np.any(np.diff(times) <= 0):
            raise NonSymmetricH("sample times must be strictly increasing")
        if not np.all(np.isfinite(stack)):
            raise NonSymmetricH("sampled matrices must be finite")
        return QuadraticHamiltonian(kind="sampled", data=(times, stack))

    @staticmethod
    def polynomial(coefficients) -> "QuadraticHamiltonian":
        stack = np.stack([_check_symmetric(c, "coefficient") for c in coefficients])
        return QuadraticHamiltonian(kind="polynomial", data=(stack,))

    @property
    def n(self) -> int:
        if self.kind == "constant":
            return self.data[0].shape[0] // 2
        if self.kind == "sampled":
            return self.data[1].shape[1] // 2
        return self.data[0].shape[1] // 2

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def __call__(self, t: float) -> np.ndarray:
        if self.kind == "constant":
            return self.data[0]
        if self.kind == "sampled":
            times, stack = self.data
            t = float(np.clip(t, times[0], times[-1]))
            idx = int(np.searchsorted(times, t, side="right") - 1)
            idx = min(max(idx, 0), len(times) - 2)
            w = (t - times[idx]) / (times[idx + 1] - times[idx])
            return (1 - w) * stack[idx] + w * stack[idx + 1]
        stack = self.data[0]
        out = np.zeros_like(stack[0])
        for k in range(len(stack) - 1, -1, -1):
            out = out * t + stack[k]
        return out


@dataclass(frozen=True)
class PropagatedState:
    """Full dossier of the propagated wavepacket at one time."""

    t: float
    S: np.ndarray
    Z: NormalisedFrame
    N: np.ndarray
    beta: float
    z: np.ndarray
    action: complex
    M: np.ndarray
    Mtilde: np.ndarray
    G: np.ndarray
    J: np.ndarray
    logdetQ: complex
    eps: float
    symplectic_defect: float
    min_positivity: float
    beta_defect: float

    @property
    def log_prefactor(self) -> complex:
        """log of the scalar prefactor: iα_t/ε + β_t (Im α folds into amplitude)."""
        return 1j * self.action / self.eps + self.beta


@dataclass(frozen=True)
class HagedornExpansion:
    """Activation coefficients of U(t)φ_α over the basis φ_k(Z_t, z_t)."""

    coefficients: dict
    log_prefactor: complex

    def norm(self) -> float:
        """Predicted L² norm e^{Re log_prefactor}·(Σ|a_k|²)^{1/2}."""
        total = math.fsum(abs(a) ** 2 for a in self.coefficients.values())
        return math.exp(self.log_prefactor.real) * math.sqrt(total)


def symplectic_defect(S: np.ndarray) -> float:
    """Max-norm of SᵀΩS − Ω."""
    S = np.asarray(S, dtype=complex)
    om = omega(S.shape[0] // 2)
    return float(np.max(np.abs(S.T @ om @ S - om)))


def flow(H: QuadraticHamiltonian, t0: float, t1: float, ode_tol: float = ODE_TOL):
    """Flow matrix S with Ṡ = ΩH_tS, S(t0) = Id, evaluated at t1."""
    if t1 < t0:
        raise DimensionMismatch("t1 must be ≥ t0")
    n = H.n
    om = omega(n)
    if H.is_constant:
        return expm((t1 - t0) * (om @ H(0.0)))
    if t1 == t0:
        return np.eye(2 * n, dtype=complex)

    def rhs(t, y):
        S = y.reshape(2 * n, 2 * n)
        return (om @ H(t) @ S).reshape(-1)

    sol = solve_ivp(
        rhs,
        (t0, t1),
        np.eye(2 * n, dtype=complex).reshape(-1),
        method="RK45",
        rtol=ode_tol,
        atol=ode_tol,
    )
    if not sol.success:
        raise StepSizeUnderflow(f"flow integration failed: {sol.message}")
    return sol.y[:, -1].reshape(2 * n, 2 * n)


# -- augmented propagation state ---------------------------------------------

def _pack(S, G, z, beta, action, logdetQ0, n):
    return np.concatenate(
        [
            S.reshape(-1).view(float),
            G.reshape(-1),
            z,
            [beta, action.real, action.imag, logdetQ0.real, logdetQ0.imag],
        ]
    )


def _unpack(y, n):
    n2 = 2 * n
    size_s = 2 * n2 * n2
    S = y[:size_s].view(complex).reshape(n2, n2)
    off = size_s
    G = y[off : off + n2 * n2].reshape(n2, n2)
    off += n2 * n2
    z = y[off : off + n2]
    off += n2
    beta = y[off]
    action = complex(y[off + 1], y[off + 2])
    logdetQ0 = complex(y[off + 3], y[off + 4])
    return S, G, z, beta, action, logdetQ0


def _propagation_rhs(H: QuadraticHamiltonian, Z0: np.ndarray, n: int):
    om = omega(n)

    def rhs(t, y):
        if not np.all(np.isfinite(y)):
            return np.full_like(y, np.nan)
        S, G, z, _, _, _ = _unpack(y, n)
        Ht = H(t)
        re_h = Ht.real
        im_h = Ht.imag
        G = 0.5 * (G + G.T)
        try:
            # trial stages past a positivity breakdown can make G singular;
            # NaN makes the step controller reject and shrink instead of crash
            Ginv = np.linalg.inv(G)
            W = S @ Z0
            dW = om @ Ht @ W
            dlogdetq = complex(np.trace(np.linalg.solve(W[n:, :].T, dW[n:, :].T)))
        except np.linalg.LinAlgError:
            return np.full_like(y, np.nan)

        dS = om @ Ht @ S
        dG = re_h @ om @ G - G @ om @ re_h - im_h - G @ om @ im_h @ om @ G
        dz = om @ re_h @ z + Ginv @ im_h @ z
        dbeta = -0.25 * float(np.trace(Ginv @ im_h))
        q_dot = dz[n:]
        p = z[:n]
        hamil = 0.5 * complex(z @ Ht @ z)
        daction = complex(q_dot @ p) - hamil
        return _pack(dS, dG, dz, dbeta, daction, dlogdetq, n)

    return rhs


def _min_positivity(S: np.ndarray, Z0: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(gram_matrix(S @ Z0))[0])


def propagate(
    Z0: NormalisedFrame,
    z0,
    H: QuadraticHamiltonian,
    times,
    eps: float = 1.0,
    ode_tol: float = ODE_TOL,
    pos_tol: float = POS_TOL,
):
    """Propagate a wavepacket frame, returning one PropagatedState per time.

    times must be increasing and start at t ≥ 0; a state is reported for every
    requested time.  Raises PositivityLost (carrying the partial results and
    the horizon time) if the evolved Lagrangian stops being positive before
    the last requested time.
    """
    if not isinstance(Z0, NormalisedFrame):
        Z0 = NormalisedFrame(LagrangianFrame(np.asarray(Z0)))
    n = Z0.n
    if H.n != n:
        raise DimensionMismatch("Hamiltonian and frame dimensions differ")
    z0 = np.asarray(z0, dtype=float).reshape(-1)
    if z0.size != 2 * n:
        raise DimensionMismatch(f"center must have 2n = {2 * n} components")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0):
        raise DimensionMismatch("times must be a strictly increasing sequence")
    if times[0] < 0:
        raise DimensionMismatch("times must start at t ≥ 0")

    # Locate any breakdown with the flow-only linear system first: it stays
    # regular through the horizon, unlike the joint system whose Riccati
    # block has a pole there.
    horizon = positivity_horizon(Z0, H, float(times[-1]), ode_tol, pos_tol)

    Z0_entries = Z0.entries
    om = omega(n)
    G0 = metric_and_structure(Z0).G
    rhs = _propagation_rhs(H, Z0_entries, n)
    logdetq0 = complex(np.log(complex(np.linalg.det(Z0.Q))))

    def positivity_event(t, y):
        S = _unpack(y, n)[0]
        return _min_positivity(S, Z0_entries) - max(pos_tol, HORIZON_EIG_FLOOR)

    positivity_event.terminal = True
    positivity_event.direction = -1

    y = _pack(
        np.eye(2 * n, dtype=complex), G0, z0.copy(), 0.0, 0j, logdetq0, n
    )
    states: list[PropagatedState] = []
    t_prev = 0.0
    for t_out in times:
        if t_out >= horizon:
            raise PositivityLost(horizon, states)
        if t_out > t_prev:
            sol = solve_ivp(
                rhs,
                (t_prev, t_out),
                y,
                method="RK45",
                rtol=ode_tol,
                atol=ode_tol,
                events=positivity_event,
                dense_output=False,
            )
            if sol.status == 1 or not sol.success:
                # an output time lies so close under the horizon that the
                # Riccati block cannot be integrated up to it
                t_star = horizon if math.isfinite(horizon) else (
                    float(sol.t_events[0][0]) if sol.status == 1 else None
                )
                if t_star is not None:
                    raise PositivityLost(t_star, states)
                raise StepSizeUnderflow(f"propagation failed: {sol.message}")
            y = sol.y[:, -1]
            t_prev = t_out
        states.append(_assemble_state(t_out, y, Z0_entries, om, n, eps, ode_tol))
    return states


def _assemble_state(t, y, Z0_entries, om, n, eps, ode_tol) -> PropagatedState:
    S, G_riccati, z, beta, action, logdetQ0 = _unpack(y, n)
    W = S @ Z0_entries
    frame, N = normalise_frame(W)
    pair = metric_and_structure(frame)
    G = pair.G

    W_bar_flow = S @ np.conj(Z0_entries)
    M = 0.25 * (W_bar_flow.T @ G @ W_bar_flow)
    M = 0.5 * (M + M.T)
    Q = frame.Q
    Mtilde = M + N @ np.linalg.solve(Q, np.conj(Q)) @ np.conj(N)
    Mtilde = 0.5 * (Mtilde + Mtilde.T)

    sign, logabsdet = np.linalg.slogdet(N)
    # N is Hermitian positive definite, so det N > 0 and the log is real
    log_det_n = float(logabsdet)
    logdetQ = logdetQ0 + log_det_n
    beta_defect = abs(beta + 0.5 * log_det_n)
    threshold = max(1e-8, 100.0 * ode_tol)
    if beta_defect > threshold:
        raise ConsistencyError(
            f"β = {beta:.12g} disagrees with −½ log det N = {-0.5 * log_det_n:.12g}"
        )
    return PropagatedState(
        t=float(t),
        S=S.copy(),
        Z=frame,
        N=N,
        beta=float(beta),
        z=z.copy(),
        action=action,
        M=M,
        Mtilde=Mtilde,
        G=G,
        J=pair.J,
        logdetQ=logdetQ,
        eps=float(eps),
        symplectic_defect=symplectic_defect(S),
        min_positivity=_min_positivity(S, Z0_entries),
        beta_defect=beta_defect,
    )


def evolve_metric_riccati(
    G0: SymplecticMetricPair,
    H: QuadraticHamiltonian,
    times,
    ode_tol: float = ODE_TOL,
):
    """Integrate the G and J Riccati equations independently.

    Ġ = ReH ΩG − GΩReH − ImH − GΩImHΩG and the J equation obtained from it by
    G = ΩJ: J̇ = ΩReH·J − J·ΩReH + ΩImH + J·ΩImH·J.  The cross-check
    J_t = −ΩG_t is enforced to 10×ode_tol at every output time.
    """
    if not isinstance(G0, SymplecticMetricPair):
        G0_mat = np.asarray(G0, dtype=float)
        om0 = omega(G0_mat.shape[0] // 2)
        G0 = SymplecticMetricPair(G=G0_mat, J=-om0 @ G0_mat)
    n = G0.n
    if H.n != n:
        raise DimensionMismatch("Hamiltonian and metric dimensions differ")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0):
        raise DimensionMismatch("times must be a strictly increasing sequence")
    om = omega(n)
    n2 = 2 * n

    def rhs(t, y):
        G = y[: n2 * n2].reshape(n2, n2)
        J = y[n2 * n2 :].reshape(n2, n2)
        G = 0.5 * (G + G.T)
        Ht = H(t)
        re_h, im_h = Ht.real, Ht.imag
        dG = re_h @ om @ G - G @ om @ re_h - im_h - G @ om @ im_h @ om @ G
        dJ = om @ re_h @ J - J @ om @ re_h + om @ im_h + J @ om @ im_h @ J
        return np.concatenate([dG.reshape(-1), dJ.reshape(-1)])

    y = np.concatenate([G0.G.reshape(-1), G0.J.reshape(-1)])
    out: list[SymplecticMetricPair] = []
    t_prev = 0.0
    if times[0] < 0:
        raise DimensionMismatch("times must start at t ≥ 0 (G0 is the t = 0 metric)")
    scale = max(1.0, float(np.max(np.abs(G0.G))))
    for t_out in times:
        if t_out > t_prev:
            sol = solve_ivp(rhs, (t_prev, float(t_out)), y, method="RK45",
                            rtol=ode_tol, atol=ode_tol)
            if not sol.success:
                raise StepSizeUnderflow(f"Riccati integration failed: {sol.message}")
            y = sol.y[:, -1]
            t_prev = float(t_out)
        G = 0.5 * (y[: n2 * n2].reshape(n2, n2) + y[: n2 * n2].reshape(n2, n2).T)
        J = y[n2 * n2 :].reshape(n2, n2)
        if np.max(np.abs(J + om @ G)) > 10 * ode_tol * scale + 1e-13:
            raise ConsistencyError("independent J-Riccati drifted away from −ΩG")
        # The integrated G leaves the symplectic manifold by O(ode_tol) per
        # period; one Newton step of (−J²)^{−1/2} restores J² = −Id (and hence
        # GΩG = Ω) while moving G only by O(defect²), far below ode_tol.
        J_g = -om @ G
        X = -J_g @ J_g
        J_g = J_g @ (1.5 * np.eye(n2) - 0.5 * X)
        G_proj = om @ J_g
        G_proj = 0.5 * (G_proj + G_proj.T)
        out.append(SymplecticMetricPair(G=G_proj, J=-om @ G_proj))
    return out


def center_dynamics(z0, H: QuadraticHamiltonian, G_path, times, ode_tol: float = ODE_TOL):
    """Integrate ż = ΩReH z + G⁻¹ImH z and the action α_t = ∫(q̇·p − ℋ_τ(z_τ))dτ.

    G_path is either a callable t ↦ G or a sequence of metrics aligned with
    times (linearly interpolated in between).  Returns (z sequence, complex
    action sequence), one entry per requested time.
    """
    n = H.n
    z0 = np.asarray(z0, dtype=float).reshape(-1)
    if z0.size != 2 * n:
        raise DimensionMismatch(f"center must have 2n = {2 * n} components")
    times = np.asarray(times, dtype=float)
    om = omega(n)

    if callable(G_path):
        metric_at = G_path
    else:
        stack = np.stack(
            [g.G if isinstance(g, SymplecticMetricPair) else np.asarray(g, float)
             for g in G_path]
        )
        if len(stack) != len(times):
            raise DimensionMismatch("G_path and times must have matching lengths")

        def metric_at(t):
            idx = int(np.searchsorted(times, t, side="right") - 1)
            idx = min(max(idx, 0), len(times) - 2)
            t0, t1 = times[idx], times[idx + 1]
            w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            return (1 - w) * stack[idx] + w * stack[idx + 1]

    def rhs(t, y):
        z = y[: 2 * n]
        Ht = H(t)
        re_h, im_h = Ht.real, Ht.imag
        G = metric_at(t)
        dz = om @ re_h @ z + np.linalg.solve(G, im_h @ z)
        hamil = 0.5 * complex(z @ Ht @ z)
        daction = complex(dz[n:] @ z[:n]) - hamil
        return np.concatenate([dz, [daction.real, daction.imag]])

    y = np.concatenate([z0, [0.0, 0.0]])
    zs, actions = [], []
    t_prev = 0.0
    if times[0] < 0:
        raise DimensionMismatch("times must start at t ≥ 0 (z0 is the t = 0 center)")
    for i, t_out in enumerate(times):
        if t_out > t_prev:
            sol = solve_ivp(rhs, (t_prev, float(t_out)), y, method="RK45",
                            rtol=ode_tol, atol=ode_tol)
            if not sol.success:
                raise StepSizeUnderflow(f"center integration failed: {sol.message}")
            y = sol.y[:, -1]
            t_prev = float(t_out)
        zs.append(y[: 2 * n].copy())
        actions.append(complex(y[2 * n], y[2 * n + 1]))
    return zs, actions


def hagedorn_coefficients(state: PropagatedState, alpha) -> HagedornExpansion:
    """Activation coefficients a_k of U(t)φ_α over φ_k(Z_t, z_t).

    Builds q_α from the recursion with M_t, substitutes x → N_t x, and scales
    monomial coefficients c_k to a_k = c_k √(k!)/√(α!).  Only indices with
    |k| ≤ |α| and |α| − |k| even appear.
    """
    n = state.Z.n
    alpha = validate_multi_index(alpha, n)
    if sum(alpha) > ALPHA_MAX:
        raise DimensionMismatch(f"|alpha| exceeds the cap {ALPHA_MAX}")
    poly = poly_recursion(state.M, alpha)
    composed = poly.compose_linear(state.N)
    fact_alpha = math.sqrt(math.prod(math.factorial(a) for a in alpha))
    coeffs = {}
    for k, c in composed.coeffs.items():
        fact_k = math.sqrt(math.prod(math.factorial(x) for x in k))
        coeffs[k] = c * fact_k / fact_alpha
    return HagedornExpansion(coefficients=coeffs, log_prefactor=state.log_prefactor)


def evolved_state_on_grid(state: PropagatedState, alpha, eps: float, grid: Grid):
    """Direct grid evaluation of U(t)φ_α via the polynomial prefactor route:

    e^{iα_t/ε + β_t}/√α! · p_α(√(2/ε) N_tQ_t⁻¹(x−q_t); M̃_t) · φ₀(Z_t, z_t; x)

    with the continuity-tracked branch of (det Q_t)^{−1/2}.
    """
    n = state.Z.n
    alpha = validate_multi_index(alpha, n)
    if sum(alpha) > ALPHA_MAX:
        raise DimensionMismatch(f"|alpha| exceeds the cap {ALPHA_MAX}")
    params = WavepacketParams(
        frame=state.Z,
        center=state.z,
        eps=eps,
        phase=state.log_prefactor,
        log_det_q=state.logdetQ,
    )
    ground = eval_ground(params, grid)
    if sum(alpha) == 0:
        return ground
    poly = poly_recursion(state.Mtilde, alpha)
    Q = state.Z.Q
    lin = state.N @ np.linalg.inv(Q)
    x = grid.points()
    y = math.sqrt(2.0 / eps) * np.einsum("ij,...j->...i", lin, x - state.z[n:])
    fact_alpha = math.sqrt(math.prod(math.factorial(a) for a in alpha))
    return poly.evaluate(y) / fact_alpha * ground


def positivity_horizon(
    Z0: NormalisedFrame,
    H: QuadraticHamiltonian,
    t_max: float,
    ode_tol: float = ODE_TOL,
    pos_tol: float = POS_TOL,
) -> float:
    """First time in (0, t_max] where the evolved frame stops being positive.

    Returns math.inf when positivity survives the whole window.  The crossing
    is located by the integrator's event refinement (well under 1e-8 in time).
    """
    if not isinstance(Z0, NormalisedFrame):
        Z0 = NormalisedFrame(LagrangianFrame(np.asarray(Z0)))
    n = Z0.n
    if H.n != n:
        raise DimensionMismatch("Hamiltonian and frame dimensions differ")
    om = omega(n)
    Z0_entries = Z0.entries

    def rhs(t, y):
        S = y.view(complex).reshape(2 * n, 2 * n)
        return (om @ H(t) @ S).reshape(-1).view(float)

    def event(t, y):
        S = y.view(complex).reshape(2 * n, 2 * n)
        return _min_positivity(S, Z0_entries) - pos_tol

    event.terminal = True
    event.direction = -1

    y0 = np.eye(2 * n, dtype=complex).reshape(-1).view(float).copy()
    sol = solve_ivp(rhs, (0.0, float(t_max)), y0, method="RK45",
                    rtol=ode_tol, atol=ode_tol, events=event)
    if not sol.success and sol.status != 1:
        raise StepSizeUnderflow(f"horizon scan failed: {sol.message}")
    if sol.status == 1 and len(sol.t_events[0]):
        return float(sol.t_events[0][0])
    return math.inf
