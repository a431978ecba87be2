"""Two-level-atom evolution maps for a resonantly driven, damped qubit.

Basis convention: index 0 = |e>, index 1 = |g>, so sigma_z|e> = +|e>.
All rates are in units of the total decay rate gamma (gamma = 1 internally);
times are in units of 1/gamma.  States are plain 2x2 complex numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InputError,
    OstensibleSupportError,
    UnsupportedRegimeError,
    ValidationError,
)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)
EXCITED_PROJ = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
GROUND = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
EXCITED = EXCITED_PROJ.copy()

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class SimParams:
    """Simulation parameters; eta_b defaults to 1 - eta_a."""

    gamma: float = 1.0
    omega: float = 2.0
    eta_a: float = 0.2
    eta_b: float = None  # type: ignore[assignment]
    t_final: float = 10.0
    dt: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.eta_b is None:
            object.__setattr__(self, "eta_b", 1.0 - self.eta_a)
        if not (0.0 <= self.eta_a <= 1.0 and 0.0 <= self.eta_b <= 1.0):
            raise ValidationError("detection efficiencies must lie in [0, 1]")
        if abs(self.eta_a + self.eta_b - 1.0) > 1e-12:
            raise ValidationError("eta_a + eta_b must equal 1")
        if self.gamma < 0 or self.omega < 0:
            raise ValidationError("gamma and omega must be nonnegative")
        if self.dt <= 0 or self.t_final <= 0:
            raise ValidationError("dt and t_final must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def time_grid(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


def hamiltonian(p: SimParams) -> np.ndarray:
    return 0.5 * p.omega * SIGMA_X


def h_effective(p: SimParams) -> np.ndarray:
    """2 H_eff = omega sigma_x - i gamma sigma_+ sigma_-."""
    return hamiltonian(p) - 0.5j * p.gamma * EXCITED_PROJ


def jump_superop(rho: np.ndarray) -> np.ndarray:
    return SIGMA_MINUS @ rho @ SIGMA_PLUS


def lindblad_rhs(rho: np.ndarray, p: SimParams) -> np.ndarray:
    he = h_effective(p)
    return p.gamma * jump_superop(rho) - 1j * (he @ rho - rho @ he.conj().T)


def _check_hermitian(rho: np.ndarray, what: str = "state"):
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL * max(1.0, np.abs(rho).max()):
        raise ValidationError(f"{what} is not Hermitian")


def lindblad_step(rho: np.ndarray, p: SimParams, dt: float) -> np.ndarray:
    """One 4th-order Runge-Kutta step of the master equation."""
    _check_hermitian(rho)
    k1 = lindblad_rhs(rho, p)
    k2 = lindblad_rhs(rho + 0.5 * dt * k1, p)
    k3 = lindblad_rhs(rho + 0.5 * dt * k2, p)
    k4 = lindblad_rhs(rho + dt * k3, p)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def lindblad_curve(p: SimParams, rho0: np.ndarray = GROUND) -> tuple:
    """Unconditioned evolution on the parameter grid: (t, states[n+1, 2, 2])."""
    n = p.n_steps
    out = np.empty((n + 1, 2, 2), dtype=complex)
    out[0] = rho0
    rho = rho0.copy()
    for i in range(n):
        rho = lindblad_step(rho, p, p.dt)
        out[i + 1] = rho
    return p.time_grid(), out


def bloch_expectations(states: np.ndarray) -> np.ndarray:
    """(..., 2, 2) density operators -> (..., 3) array of <sx>, <sy>, <sz>."""
    sx = 2.0 * states[..., 0, 1].real
    sy = -2.0 * states[..., 0, 1].imag
    sz = (states[..., 0, 0] - states[..., 1, 1]).real
    return np.stack([sx, sy, sz], axis=-1)


# ---------------------------------------------------------------------------
# Photon-counting (jump) filter, Euler discrete maps
# ---------------------------------------------------------------------------

def jump_filter_step(rho: np.ndarray, clicked: bool, p: SimParams, dt: float) -> np.ndarray:
    """Unnormalized filter update for the observer detecting a fraction eta_a.

    The click/no-click traces complement each other exactly, so the traces of
    all click sequences over a grid sum to the input trace.
    """
    _check_hermitian(rho)
    if clicked:
        return p.gamma * p.eta_a * dt * jump_superop(rho)
    return rho + dt * (lindblad_rhs(rho, p) - p.gamma * p.eta_a * jump_superop(rho))


def jump_filter_curve(record, p: SimParams, rho0: np.ndarray = GROUND) -> tuple:
    """Normalized filtered states and the log record-probability density.

    Clicks are aligned to the grid step containing them.  Returns
    (t, states[n+1, 2, 2] normalized, log_trace[n+1]).
    """
    n = p.n_steps
    click_steps = set(click_step_indices(record, p))
    states = np.empty((n + 1, 2, 2), dtype=complex)
    logtr = np.zeros(n + 1)
    rho = rho0.copy()
    states[0] = rho
    acc = 0.0
    for i in range(n):
        rho = jump_filter_step(rho, i in click_steps, p, p.dt)
        tr = rho[0, 0].real + rho[1, 1].real
        if tr <= 0.0:
            raise ValidationError(f"filter trace vanished at step {i} (impossible record)")
        acc += math.log(tr)
        rho = rho / tr
        states[i + 1] = rho
        logtr[i + 1] = acc
    return p.time_grid(), states, logtr


def click_step_indices(record, p: SimParams) -> list:
    """Map click times in [0, t_final) to grid step indices."""
    out = []
    prev = -1.0
    for t in record:
        if not (0.0 <= t < p.t_final):
            raise InputError(f"click time {t} outside [0, {p.t_final})")
        if t <= prev:
            raise InputError("click times must be strictly increasing")
        prev = t
        out.append(min(int(t / p.dt), p.n_steps - 1))
    return out


# ---------------------------------------------------------------------------
# Y-homodyne (diffusive) filter
# ---------------------------------------------------------------------------

def homodyne_filter_step(rho: np.ndarray, dW: float, p: SimParams, dt: float) -> np.ndarray:
    """Euler-Maruyama update of the unnormalized diffusive filter."""
    _check_hermitian(rho)
    if not np.isfinite(dW):
        raise InputError("Wiener increment must be finite")
    noise = 1j * (SIGMA_MINUS @ rho) - 1j * (rho @ SIGMA_PLUS)
    return rho + dt * lindblad_rhs(rho, p) + math.sqrt(p.eta_a * p.gamma) * dW * noise


def homodyne_current(rho: np.ndarray, dW: float, p: SimParams, dt: float) -> float:
    """Y_t = <sigma_y> + dW / (sqrt(eta_a gamma) dt) for a normalized state."""
    if p.eta_a == 0.0:
        raise InputError("homodyne current is undefined for eta_a = 0")
    sy = -2.0 * rho[0, 1].imag
    return sy + dW / (math.sqrt(p.eta_a * p.gamma) * dt)


# ---------------------------------------------------------------------------
# Bob-conditioned linear (ostensible-measure) maps and their adjoints
# ---------------------------------------------------------------------------

def bob_linear_step(rho: np.ndarray, bob_clicked: bool, alice_clicked: bool,
                    lambda_t: float, p: SimParams, dt: float) -> np.ndarray:
    """Unnormalized update conditioned on both observers' counting records.

    The Alice-click constant is fixed to gamma*eta_a so traces remain
    physical record-probability densities; it cancels in anything normalized.
    """
    if lambda_t < 0:
        raise InputError("ostensible rate must be nonnegative")
    if bob_clicked and alice_clicked:
        raise InputError("simultaneous clicks are excluded by construction")
    if bob_clicked:
        if lambda_t == 0.0:
            raise OstensibleSupportError("click where the ostensible rate vanishes")
        return (p.gamma * p.eta_b / lambda_t) * jump_superop(rho)
    if alice_clicked:
        return p.gamma * p.eta_a * jump_superop(rho)
    gen = (lindblad_rhs(rho, p) + lambda_t * rho
           - p.gamma * (p.eta_b + p.eta_a) * jump_superop(rho))
    return rho + dt * gen


def bob_marginal_step(rho: np.ndarray, bob_clicked: bool, lambda_t: float,
                      p: SimParams, dt: float) -> np.ndarray:
    """Bob-conditioned, Alice-averaged update (no conditioning on Alice's arm).

    Averaging this map over Bob's detections is trace preserving, which is
    what makes ostensible-trace weights unbiased.
    """
    if bob_clicked:
        if lambda_t == 0.0:
            raise OstensibleSupportError("click where the ostensible rate vanishes")
        return (p.gamma * p.eta_b / lambda_t) * jump_superop(rho)
    gen = (lindblad_rhs(rho, p) + lambda_t * rho
           - p.gamma * p.eta_b * jump_superop(rho))
    return rho + dt * gen


def effect_backstep(effect: np.ndarray, bob_clicked: bool, lambda_t: float,
                    p: SimParams, dt: float, alice_clicked: bool = False) -> np.ndarray:
    """Adjoint of `bob_linear_step`: Tr[(back E) rho] = Tr[E (forward rho)]."""
    _check_hermitian(effect, "effect")
    if bob_clicked:
        if lambda_t == 0.0:
            raise OstensibleSupportError("click where the ostensible rate vanishes")
        return (p.gamma * p.eta_b / lambda_t) * (SIGMA_PLUS @ effect @ SIGMA_MINUS)
    if alice_clicked:
        return p.gamma * p.eta_a * (SIGMA_PLUS @ effect @ SIGMA_MINUS)
    he = h_effective(p)
    gen = (1j * (he.conj().T @ effect - effect @ he) + lambda_t * effect
           + (1.0 - p.eta_a - p.eta_b) * p.gamma
           * (SIGMA_PLUS @ effect @ SIGMA_MINUS))
    return effect + dt * gen


# ---------------------------------------------------------------------------
# Piecewise analytic solution of the linear Bob-conditioned equation
# ---------------------------------------------------------------------------

def expm2(m: np.ndarray) -> np.ndarray:
    """Closed-form exponential of a 2x2 complex matrix."""
    half_tr = 0.5 * (m[0, 0] + m[1, 1])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    q = np.lib.scimath.sqrt(half_tr * half_tr - det)
    if abs(q) < 1e-30:
        ch, sh_over_q = 1.0, 1.0
    else:
        ch = np.cosh(q)
        sh_over_q = np.sinh(q) / q
    return np.exp(half_tr) * (ch * np.eye(2) + sh_over_q * (m - half_tr * np.eye(2)))


def inter_jump_weight(t: float, p: SimParams) -> float:
    """A(t) = exp(-gamma t / 2) sin^2(Omega' t / 2) (Omega/Omega')^2 eta_b gamma."""
    op = rabi_damped(p)
    return (math.exp(-0.5 * p.gamma * t) * math.sin(0.5 * op * t) ** 2
            * (p.omega / op) ** 2 * p.eta_b * p.gamma)


def rabi_damped(p: SimParams) -> float:
    """Omega' = sqrt(Omega^2 - (gamma/2)^2); requires the underdamped regime."""
    disc = p.omega ** 2 - 0.25 * p.gamma ** 2
    if disc <= 0.0:
        raise UnsupportedRegimeError("piecewise solution assumes Omega > gamma/2")
    return math.sqrt(disc)


def piecewise_solution(record, t0: float, t1: float, lambda_of_t, p: SimParams,
                       rho0: np.ndarray = GROUND, lambda_integral: float | None = None
                       ) -> np.ndarray:
    """Closed-form unnormalized Bob-conditioned state at t1.

    `record` lists Bob's click times inside [t0, t1); `lambda_of_t` evaluates
    the ostensible rate; `lambda_integral` is the integral of the rate over
    [t0, t1) (computed by 2000-point trapezoid if omitted).  No-jump segments
    are exact matrix exponentials of -i H_eff; the scalar factor is
    exp(int lambda) / prod lambda(s_k).
    """
    rabi_damped(p)  # regime check
    times = list(record)
    if any(not (t0 <= s < t1) for s in times):
        raise InputError("record times must lie inside the interval")
    if lambda_integral is None:
        grid = np.linspace(t0, t1, 2001)
        lambda_integral = float(np.trapezoid([lambda_of_t(s) for s in grid], grid))
    he = h_effective(p)
    rho = np.array(rho0, dtype=complex)
    prev = t0
    log_scale = lambda_integral
    for s in times:
        u = expm2(-1j * he * (s - prev))
        rho = u @ rho @ u.conj().T
        rho = p.gamma * p.eta_b * jump_superop(rho)
        lam = lambda_of_t(s)
        if lam <= 0.0:
            raise OstensibleSupportError("click where the ostensible rate vanishes")
        log_scale -= math.log(lam)
        prev = s
    u = expm2(-1j * he * (t1 - prev))
    rho = u @ rho @ u.conj().T
    return math.exp(log_scale) * rho


# ---------------------------------------------------------------------------
# Superoperator helpers (vectorized rho as a length-4 vector, row-major)
# ---------------------------------------------------------------------------

def superop(apply_map) -> np.ndarray:
    """4x4 matrix of a linear map on 2x2 matrices, acting on rho.reshape(4)."""
    out = np.zeros((4, 4), dtype=complex)
    for j in range(4):
        basis = np.zeros(4, dtype=complex)
        basis[j] = 1.0
        out[:, j] = apply_map(basis.reshape(2, 2)).reshape(4)
    return out


def lindblad_superop(p: SimParams) -> np.ndarray:
    return superop(lambda rho: lindblad_rhs(rho, p))


def jump_superop_matrix() -> np.ndarray:
    return superop(jump_superop)


def steady_state(p: SimParams) -> np.ndarray:
    """Steady state via a linear solve of the optical Bloch equations."""
    m = lindblad_superop(p)
    a = np.vstack([m, np.array([[1.0, 0.0, 0.0, 1.0]], dtype=complex)])
    b = np.zeros(5, dtype=complex)
    b[4] = 1.0
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    return sol.reshape(2, 2)
