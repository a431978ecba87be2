"""Retrodictive ensemble machinery for the two-observer counting experiment.

One observer ("Alice") publishes her record: a single detector click at
`t_click` and silence elsewhere, at efficiency eta_a.  The other arm
("Bob", efficiency eta_b) is unobserved; his possible records are sampled
from an inhomogeneous Poisson process with the ostensible rate
lambda(t) = gamma * eta_b * <e|rho_A(t)|e>, where rho_A is the state filtered
on Alice's record alone.  Importance weights correct the ostensible measure to
the true joint record probability, using the closed-form piecewise solution of
the linear Bob-conditioned equation.  Resampled records feed two consumers:
the Bob-click rate conditioned on Alice's record, and the smoothed weak value
of sigma_y (the "suspectation" curve).

Because Alice's click resets the filtered state to the ground state, record
probabilities factorize across [0, t_click) and [t_click, t_final), so the two
interval ensembles are sampled, weighted, and resampled independently.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import expm

from . import kernels
from .errors import DegenerateEnsembleError, InputError
from .qubit import (
    GROUND,
    SimParams,
    click_step_indices,
    jump_filter_curve,
    jump_superop_matrix,
    lindblad_superop,
    piecewise_solution,
)
from .trajectories import (
    OUTPUT_STRIDE,
    TAG_PRE_INTERVAL,
    TAG_POST_INTERVAL,
    TAG_RESAMPLE,
    substream,
)


@dataclass
class OstensibleRate:
    """Rate lambda(t) on the simulation grid with its cumulative integral.

    At a click step the rate holds the post-reset value (zero), so sampling
    restarts from the ground state there.
    """

    t: np.ndarray
    lam: np.ndarray
    cum: np.ndarray = field(init=False)

    def __post_init__(self):
        if np.any(self.lam < 0):
            raise InputError("ostensible rate must be nonnegative")
        self.cum = np.concatenate(([0.0], cumulative_trapezoid(self.lam, self.t)))

    def value(self, s: float) -> float:
        return float(np.interp(s, self.t, self.lam))

    def cumulative(self, s: float) -> float:
        return float(np.interp(s, self.t, self.cum))

    def integral(self, t0: float, t1: float) -> float:
        return self.cumulative(t1) - self.cumulative(t0)

    def inverse_cumulative(self, x: float) -> float:
        return float(np.interp(x, self.cum, self.t))


def ostensible_rate(p: SimParams, t_click: float) -> OstensibleRate:
    """lambda(t) from the filter conditioned on Alice's single-click record."""
    t, states, _ = jump_filter_curve([t_click], p)
    lam = p.gamma * p.eta_b * states[:, 0, 0].real
    for ic in click_step_indices([t_click], p):
        lam[ic] = p.gamma * p.eta_b * states[ic + 1, 0, 0].real
    lam = np.clip(lam, 0.0, None)
    return OstensibleRate(t=t, lam=lam)


def sample_jump_times(rate: OstensibleRate, t0: float, t1: float,
                      rng: np.random.Generator) -> tuple:
    """One inhomogeneous-Poisson record on [t0, t1) by inversion."""
    if not (t0 < t1):
        raise InputError("need t0 < t1")
    x = rate.cumulative(t0)
    top = rate.cumulative(t1)
    times = []
    while True:
        x += rng.exponential()
        if x >= top:
            break
        times.append(rate.inverse_cumulative(x))
    return tuple(times)


@dataclass
class WeightedEnsemble:
    """Sampled records on one interval with log importance weights."""

    t0: float
    t1: float
    records: list
    logw: np.ndarray
    ends_with_click: bool


def record_weight(clicks, t0: float, t1: float, rate: OstensibleRate,
                  p: SimParams, ends_with_click: bool) -> float:
    """log of (true record probability density / sampling density).

    The common factor gamma*eta_a at the terminal click is dropped; it cancels
    on normalization.
    """
    lam_int = rate.integral(t0, t1)
    rho = piecewise_solution(clicks, t0, t1, rate.value, p,
                             rho0=GROUND, lambda_integral=lam_int)
    w = rho[0, 0].real if ends_with_click else (rho[0, 0] + rho[1, 1]).real
    if not np.isfinite(w) or w <= 0.0:
        return -np.inf
    return float(np.log(w))


def build_interval_ensemble(p: SimParams, rate: OstensibleRate, t0: float,
                            t1: float, n_records: int, tag: int,
                            ends_with_click: bool) -> WeightedEnsemble:
    records = []
    logw = np.empty(n_records)
    for k in range(n_records):
        rng = substream(p.seed, tag, k)
        rec = sample_jump_times(rate, t0, t1, rng)
        records.append(rec)
        logw[k] = record_weight(rec, t0, t1, rate, p, ends_with_click)
    return WeightedEnsemble(t0=t0, t1=t1, records=records, logw=logw,
                            ends_with_click=ends_with_click)


def build_ostensible_ensemble(p: SimParams, t_click: float, n_records: int,
                              rate: OstensibleRate | None = None
                              ) -> tuple[WeightedEnsemble, WeightedEnsemble]:
    """Independent weighted ensembles on [0, t_click) and [t_click, t_final)."""
    if not (0.0 < t_click < p.t_final):
        raise InputError("Alice's click must lie strictly inside the run")
    if rate is None:
        rate = ostensible_rate(p, t_click)
    pre = build_interval_ensemble(p, rate, 0.0, t_click, n_records,
                                  TAG_PRE_INTERVAL, ends_with_click=True)
    post = build_interval_ensemble(p, rate, t_click, p.t_final, n_records,
                                   TAG_POST_INTERVAL, ends_with_click=False)
    return pre, post


def resample(ens: WeightedEnsemble, n_out: int, rng: np.random.Generator) -> list:
    """Multinomial resampling by normalized importance weight."""
    finite = np.isfinite(ens.logw)
    if not finite.any():
        raise DegenerateEnsembleError("all record weights vanish")
    w = np.zeros_like(ens.logw)
    w[finite] = np.exp(ens.logw[finite] - ens.logw[finite].max())
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(n_out), side="right")
    idx = np.minimum(idx, len(ens.records) - 1)
    return [ens.records[i] for i in idx]


def resampled_records(p: SimParams, t_click: float, n_records: int,
                      n_resample: int,
                      rate: OstensibleRate | None = None) -> list:
    """Full-interval Bob records distributed as the smoothed posterior."""
    pre, post = build_ostensible_ensemble(p, t_click, n_records, rate=rate)
    rng = substream(p.seed, TAG_RESAMPLE)
    pre_r = resample(pre, n_resample, rng)
    post_r = resample(post, n_resample, rng)
    return [a + b for a, b in zip(pre_r, post_r)]


def conditioned_jump_rate(records: list, p: SimParams,
                          bin_width: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
    """Empirical Bob-click rate (bin centers, counts / (n * width))."""
    if not records:
        raise InputError("need at least one record")
    if bin_width <= 0:
        raise InputError("bin width must be positive")
    n_bins = int(round(p.t_final / bin_width))
    edges = np.linspace(0.0, p.t_final, n_bins + 1)
    allt = np.concatenate([np.asarray(r, dtype=float) for r in records]) \
        if any(len(r) for r in records) else np.empty(0)
    counts, _ = np.histogram(allt, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, counts / (len(records) * bin_width)


@dataclass
class SuspectationCurve:
    """Smoothed weak value of sigma_y averaged over resampled records."""

    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_used: int
    n_excluded: int


def _record_click_steps(record, p: SimParams) -> np.ndarray:
    """Grid indices of Bob's clicks; same-step collisions nudged forward."""
    idx = sorted(click_step_indices(sorted(set(record)), p))
    out = []
    for i in idx:
        if out and i <= out[-1]:
            i = out[-1] + 1
        if i >= p.n_steps:
            raise InputError("click indices spill past the grid")
        out.append(i)
    return np.asarray(out, dtype=np.int64)


def suspectation_curve(records: list, p: SimParams,
                       stride: int = OUTPUT_STRIDE) -> SuspectationCurve:
    """Mean weak value 2 Re Tr[E i sigma_- rho] / Tr[E rho] over records.

    rho is the Bob-conditioned, Alice-averaged state filtered forward on each
    record; E is the unit effect propagated backward by the adjoint maps.
    The click record's influence on the other arm enters only through the
    smoothed distribution the records were resampled from.  Scalar factors
    (the ostensible-rate terms) cancel in the ratio.  Records whose
    denominator falls below 1e-12 at any output time are excluded with a
    warning.
    """
    if p.n_steps % stride != 0:
        raise InputError("output stride must divide the number of steps")
    n_rec = len(records)
    if n_rec == 0:
        raise InputError("need at least one record")
    steps = [_record_click_steps(r, p) for r in records]
    max_c = max(len(s) for s in steps)
    click_idx = np.zeros((n_rec, max(max_c, 1)), dtype=np.int64)
    click_cnt = np.empty(n_rec, dtype=np.int64)
    for k, s in enumerate(steps):
        click_idx[k, : len(s)] = s
        click_cnt[k] = len(s)
    gen = lindblad_superop(p) - p.gamma * p.eta_b * jump_superop_matrix()
    p_fwd = expm(p.dt * gen)
    p_back = p_fwd.conj().T.copy()
    n_out = p.n_steps // stride + 1
    wv = np.zeros((n_rec, n_out))
    valid = np.ones(n_rec, dtype=np.bool_)
    rho0 = np.asarray(GROUND, dtype=complex).reshape(4)
    kernels.suspect_sweeps(click_idx, click_cnt, rho0, p_fwd, p_back,
                           p.n_steps, stride, wv, valid)
    n_used = int(valid.sum())
    n_excluded = n_rec - n_used
    if n_used == 0:
        raise DegenerateEnsembleError("every record was excluded")
    if n_excluded:
        warnings.warn(f"excluded {n_excluded} record(s) with vanishing "
                      "denominator", RuntimeWarning)
    good = wv[valid]
    mean = good.mean(axis=0)
    stderr = (good.std(axis=0, ddof=1) / np.sqrt(n_used)) if n_used > 1 \
        else np.zeros(n_out)
    t = np.arange(n_out) * (stride * p.dt)
    return SuspectationCurve(t=t, mean=mean, stderr=stderr,
                             n_used=n_used, n_excluded=n_excluded)
