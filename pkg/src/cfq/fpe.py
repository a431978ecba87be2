"""Bloch-angle distribution of the homodyne-monitored, no-Bob-click state.

With one output monitored by Y-homodyne (efficiency eta_a) and the other by a
silent photon counter (eta_b), pure states confined to the y-z great circle
are parametrized by theta with <sy> = sin(theta), <sz> = cos(theta).  The
unnormalized density obeys an advection-diffusion-sink equation:

    d p/dt = -d/dth [A p] - (gamma eta_b / 2)(1 + cos th) p
             + 1/2 d^2/dth^2 [B^2 p] + d/dth [B sqrt(gamma eta_a) sin th p]

    A(th) = -(Omega - (gamma eta_b / 2) sin th + (gamma eta_a / 2) cos th sin th)
    B(th) = -sqrt(gamma eta_a) (1 + cos th)

Discretization is method-of-lines on a periodic uniform grid with conservative
central differences for both flux terms; the stiff linear system is advanced
by scipy's BDF with the exact (constant, sparse) Jacobian, which sub-steps
automatically instead of blowing up.  An Euler-Maruyama Monte Carlo of the
matching weighted stochastic equation provides an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from . import kernels
from .errors import DegenerateEnsembleError, InputError, ValidationError
from .qubit import EXCITED_PROJ, GROUND, SIGMA_MINUS, SIGMA_PLUS, SimParams, hamiltonian, superop
from .trajectories import CHUNK_STEPS, TAG_THETA

CLIP_BUDGET = 1e-8
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FpeParams:
    """Physical rates plus grid and initial-Gaussian shape."""

    gamma: float = 1.0
    omega: float = 2.0
    eta_a: float = 0.2
    eta_b: float = 0.8
    n_grid: int = 2048
    mu: float = np.pi
    sigma: float = 0.01

    def __post_init__(self):
        if self.n_grid < 512:
            raise ValidationError("n_grid must be at least 512")
        if self.sigma <= 0:
            raise ValidationError("sigma must be positive")
        if self.gamma < 0 or not (0 <= self.eta_a <= 1 and 0 <= self.eta_b <= 1):
            raise ValidationError("rates/efficiencies out of range")

    @classmethod
    def from_sim(cls, p: SimParams, n_grid: int = 2048, mu: float = np.pi,
                 sigma: float = 0.01) -> "FpeParams":
        return cls(gamma=p.gamma, omega=p.omega, eta_a=p.eta_a, eta_b=p.eta_b,
                   n_grid=n_grid, mu=mu, sigma=sigma)


@dataclass
class ThetaPdf:
    """Density values on a uniform closed grid over [0, 2*pi]."""

    theta: np.ndarray
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.theta.shape != self.values.shape:
            raise InputError("grid/value shape mismatch")
        if np.min(self.values) < -1e-12:
            raise ValidationError("density has significant negative values")
        if abs(self.values[0] - self.values[-1]) > 1e-9 * max(1.0, np.max(self.values)):
            raise ValidationError("density endpoints must match (periodicity)")

    def mass(self) -> float:
        return float(np.trapezoid(self.values, self.theta))


def theta_grid(n_grid: int) -> np.ndarray:
    return np.linspace(0.0, TWO_PI, n_grid)


def gaussian_init(mu: float, sigma: float, grid: np.ndarray) -> ThetaPdf:
    """Normalized wrapped Gaussian; peak approx 1/sqrt(2 pi sigma^2)."""
    if sigma <= 0:
        raise InputError("sigma must be positive")
    vals = np.zeros_like(grid)
    for k in range(-3, 4):
        vals += np.exp(-0.5 * ((grid - mu - k * TWO_PI) / sigma) ** 2)
    vals /= sigma * np.sqrt(TWO_PI)
    pdf = ThetaPdf(theta=grid.copy(), values=vals)
    return normalize_pdf(pdf)


def drift_coefficient(theta: np.ndarray, fp: FpeParams) -> np.ndarray:
    """Combined advection coefficient A - B sqrt(gamma eta_a) sin(theta)."""
    g, ea, eb = fp.gamma, fp.eta_a, fp.eta_b
    a = -(fp.omega - 0.5 * g * eb * np.sin(theta)
          + 0.5 * g * ea * np.cos(theta) * np.sin(theta))
    b = -np.sqrt(g * ea) * (1.0 + np.cos(theta))
    return a - b * np.sqrt(g * ea) * np.sin(theta)


def diffusion_coefficient(theta: np.ndarray, fp: FpeParams) -> np.ndarray:
    return fp.gamma * fp.eta_a * (1.0 + np.cos(theta)) ** 2


def sink_coefficient(theta: np.ndarray, fp: FpeParams) -> np.ndarray:
    return 0.5 * fp.gamma * fp.eta_b * (1.0 + np.cos(theta))


INTERNAL_POINTS = 4000


def _fft_upsample(y: np.ndarray, r: int) -> np.ndarray:
    """Trigonometric interpolation of periodic samples onto an r-times grid."""
    if r == 1:
        return y.copy()
    n = y.size
    m = n * r
    f = np.fft.rfft(y)
    padded = np.zeros(m // 2 + 1, dtype=complex)
    padded[: f.size] = f * (m / n)
    return np.fft.irfft(padded, m)


def _generator_matrix(fp: FpeParams, n: int) -> sp.csr_matrix:
    """Sparse method-of-lines operator on n unique periodic points."""
    h = TWO_PI / n
    th = np.arange(n) * h
    c1 = drift_coefficient(th, fp)
    c2 = diffusion_coefficient(th, fp)
    s = sink_coefficient(th, fp)
    i = np.arange(n)
    up = (i + 1) % n
    dn = (i - 1) % n
    rows = np.concatenate([i, i, i])
    cols = np.concatenate([up, i, dn])
    data = np.concatenate([
        -c1[up] / (2 * h) + 0.5 * c2[up] / h ** 2,
        -c2[i] / h ** 2 - s[i],
        c1[dn] / (2 * h) + 0.5 * c2[dn] / h ** 2,
    ])
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def fpe_evolve(pdf: ThetaPdf, fp: FpeParams, t0: float, t1: float) -> ThetaPdf:
    """Advance the unnormalized density from t0 to t1.

    The density is trigonometrically interpolated onto a grid of at least
    INTERNAL_POINTS unique points (an integer refinement, so output points are
    sampled exactly), where the conservative central-difference operator
    resolves the paper's sigma = 0.01 initial data without dispersive
    negatives; scipy's BDF handles the stiff diffusion with automatic
    sub-stepping.  Negative round-off is clipped at the end and must stay
    below CLIP_BUDGET of the mass.
    """
    if not t1 > t0:
        raise InputError("need t1 > t0")
    if pdf.theta.size != fp.n_grid:
        raise InputError("pdf grid size does not match FpeParams.n_grid")
    n = fp.n_grid - 1
    r = max(1, -(-INTERNAL_POINTS // n))
    m = n * r
    gen = _generator_matrix(fp, m)
    y0 = _fft_upsample(pdf.values[:n].astype(float), r)
    sol = solve_ivp(lambda _t, y: gen @ y, (t0, t1), y0, method="BDF",
                    jac=gen, rtol=1e-8, atol=1e-12)
    if not sol.success:
        raise ValidationError(f"PDE integration failed: {sol.message}")
    y = sol.y[:, -1]
    if not np.all(np.isfinite(y)):
        raise ValidationError("PDE solution blew up")
    clipped = float(-y[y < 0].sum()) * (TWO_PI / m)
    mass0 = max(pdf.mass(), np.finfo(float).tiny)
    if clipped > CLIP_BUDGET * mass0:
        raise ValidationError("negative density exceeds round-off budget")
    yc = np.clip(y[::r], 0.0, None)
    vals = np.concatenate([yc, yc[:1]])
    return ThetaPdf(theta=pdf.theta.copy(), values=vals, time=t1)


def normalize_pdf(pdf: ThetaPdf) -> ThetaPdf:
    mass = pdf.mass()
    if mass <= 0:
        raise DegenerateEnsembleError("density has zero mass")
    return ThetaPdf(theta=pdf.theta.copy(), values=pdf.values / mass, time=pdf.time)


def positive_mass(pdf: ThetaPdf) -> float:
    """Fraction of mass where sin(theta) > 0, i.e. theta in (0, pi)."""
    sel = pdf.theta <= np.pi + 1e-12
    return float(np.trapezoid(pdf.values[sel], pdf.theta[sel]))


def sigma_y_of_theta(theta):
    return np.sin(theta)


def characteristic_record_protocol(p: SimParams, t_click: float = 6.25,
                                   tau: float = 1.54, n_grid: int = 2048,
                                   sigma0: float = 0.01) -> ThetaPdf:
    """Distribution at t_click given Bob's most likely record.

    Bob's single click at t_click - tau resets the state to the ground state
    (theta = pi, seeded as a narrow Gaussian); the no-click equation then runs
    for tau and the result is normalized.
    """
    fp = FpeParams.from_sim(p, n_grid=n_grid, mu=np.pi, sigma=sigma0)
    pdf = gaussian_init(fp.mu, fp.sigma, theta_grid(n_grid))
    pdf.time = t_click - tau
    if tau == 0.0:
        return pdf
    out = fpe_evolve(pdf, fp, t_click - tau, t_click)
    return normalize_pdf(out)


# ---------------------------------------------------------------------------
# Monte Carlo cross-check of the PDE
# ---------------------------------------------------------------------------

def _mc_generator(p: SimParams) -> np.ndarray:
    """Deterministic part of the weighted no-Bob-click stochastic equation."""
    h = hamiltonian(p)

    def gen(rho):
        dis = SIGMA_MINUS @ rho @ SIGMA_PLUS - 0.5 * (EXCITED_PROJ @ rho + rho @ EXCITED_PROJ)
        kill = -0.5 * p.gamma * p.eta_b * (EXCITED_PROJ @ rho + rho @ EXCITED_PROJ)
        return -1j * (h @ rho - rho @ h) + p.gamma * p.eta_a * dis + kill

    return np.eye(4, dtype=complex) + p.dt * superop(gen)


def mc_theta_samples(p: SimParams, n_paths: int, rng: np.random.Generator,
                     tau: float = 1.54) -> tuple[np.ndarray, np.ndarray]:
    """(theta, normalized weights) after evolving ground-state paths for tau."""
    if n_paths < 1:
        raise InputError("need at least one path")
    n_steps = int(round(tau / p.dt))
    m_gen = _mc_generator(p)
    coef = np.sqrt(p.gamma * p.eta_a)
    v = np.tile(np.asarray(GROUND, dtype=complex).reshape(4), (n_paths, 1))
    logw = np.zeros(n_paths)
    done = 0
    while done < n_steps:
        n_sub = min(CHUNK_STEPS, n_steps - done)
        dws = rng.normal(0.0, np.sqrt(p.dt), (n_paths, n_sub))
        kernels.theta_chunk(v, logw, m_gen, coef, dws)
        done += n_sub
    sy = -2.0 * v[:, 1].imag
    sz = (v[:, 0] - v[:, 3]).real
    theta = np.mod(np.arctan2(sy, sz), TWO_PI)
    w = np.exp(logw - logw.max())
    return theta, w / w.sum()


def monte_carlo_theta_distribution(p: SimParams, n_paths: int,
                                   rng: np.random.Generator, tau: float = 1.54,
                                   n_grid: int = 2048) -> ThetaPdf:
    """Weighted histogram of Monte Carlo angles as a normalized ThetaPdf."""
    if n_paths < 1000:
        raise InputError("need at least 1000 paths for a meaningful histogram")
    theta, w = mc_theta_samples(p, n_paths, rng, tau=tau)
    n = n_grid - 1
    h = TWO_PI / n
    idx = np.mod(np.rint(theta / h).astype(int), n)
    dens = np.bincount(idx, weights=w, minlength=n) / h
    vals = np.concatenate([dens, dens[:1]])
    return normalize_pdf(ThetaPdf(theta=theta_grid(n_grid), values=vals, time=tau))
