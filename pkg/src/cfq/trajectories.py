"""Ensembles of individually monitored trajectories under the physical measure.

Both unravelings advance the deterministic part of each step with the exact
exponential of the relevant superoperator, so ensemble averages reproduce the
master equation without first-order time-step bias; only the click placement
(midpoint of its step) and the diffusive noise term are O(dt) approximate.

All random numbers are drawn from numpy generators outside the compiled
kernels, in a fixed order, so results do not depend on the kernel backend's
thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import kernels
from .errors import InputError
from .qubit import (
    GROUND,
    SimParams,
    bloch_expectations,
    jump_superop_matrix,
    lindblad_superop,
)

OUTPUT_STRIDE = 10
CHUNK_STEPS = 2000

# substream tags for SeedSequence spawn keys
TAG_JUMP = 101
TAG_HOMODYNE = 102
TAG_THETA = 103
TAG_PRE_INTERVAL = 1
TAG_POST_INTERVAL = 2
TAG_RESAMPLE = 3


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a named part of the computation."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass
class EnsembleResult:
    """Bloch-vector trajectories on the output grid.

    obs has shape (n_paths, n_out, 3) with components <sx>, <sy>, <sz>.
    """

    t: np.ndarray
    obs: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        return self.obs.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        n = self.obs.shape[0]
        return self.obs.std(axis=0, ddof=1) / np.sqrt(n)


def _output_grid(p: SimParams, stride: int) -> np.ndarray:
    if p.n_steps % stride != 0:
        raise InputError("output stride must divide the number of steps")
    return np.arange(p.n_steps // stride + 1) * (stride * p.dt)


def _flat(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(4)


def jump_propagators(p: SimParams) -> tuple[np.ndarray, np.ndarray]:
    """(full-step, half-step) exponentials of the no-click generator."""
    gen = lindblad_superop(p) - p.gamma * p.eta_a * jump_superop_matrix()
    return expm(p.dt * gen), expm(0.5 * p.dt * gen)


def jump_ensemble(p: SimParams, n_paths: int, rho0: np.ndarray = GROUND,
                  stride: int = OUTPUT_STRIDE) -> EnsembleResult:
    """Photon-counting unraveling at efficiency eta_a (the rest unobserved)."""
    if n_paths < 1:
        raise InputError("need at least one path")
    t = _output_grid(p, stride)
    m_nc, m_half = jump_propagators(p)
    v = np.tile(_flat(rho0), (n_paths, 1))
    obs = np.empty((n_paths, t.size, 3))
    obs[:, 0, :] = bloch_expectations(np.asarray(rho0, dtype=complex))
    rng = substream(p.seed, TAG_JUMP)
    step0 = 0
    while step0 < p.n_steps:
        n_sub = min(CHUNK_STEPS, p.n_steps - step0)
        uniforms = rng.random((n_paths, n_sub))
        kernels.jump_chunk(v, m_nc, m_half, uniforms, step0, stride, obs)
        step0 += n_sub
    return EnsembleResult(t=t, obs=obs)


def homodyne_ensemble(p: SimParams, n_paths: int, rho0: np.ndarray = GROUND,
                      stride: int = OUTPUT_STRIDE) -> EnsembleResult:
    """Y-homodyne unraveling at efficiency eta_a.

    The step is exp(dt L) plus the Ito noise term evaluated at the step start,
    so the conditional one-step mean is exactly the master-equation update.
    """
    if n_paths < 1:
        raise InputError("need at least one path")
    t = _output_grid(p, stride)
    m_lin = expm(p.dt * lindblad_superop(p))
    coef = np.sqrt(p.eta_a * p.gamma)
    v = np.tile(_flat(rho0), (n_paths, 1))
    obs = np.empty((n_paths, t.size, 3))
    obs[:, 0, :] = bloch_expectations(np.asarray(rho0, dtype=complex))
    rng = substream(p.seed, TAG_HOMODYNE)
    step0 = 0
    while step0 < p.n_steps:
        n_sub = min(CHUNK_STEPS, p.n_steps - step0)
        dws = rng.normal(0.0, np.sqrt(p.dt), (n_paths, n_sub))
        kernels.homodyne_chunk(v, m_lin, coef, dws, step0, stride, obs)
        step0 += n_sub
    return EnsembleResult(t=t, obs=obs)
