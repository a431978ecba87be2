"""Hot inner loops for trajectory ensembles.

Every kernel exists twice: a numba @njit per-path loop and a pure-numpy
path-vectorized fallback.  The implementation is chosen at import time by the
CFQ_NUMBA environment variable ("0"/"false" forces the numpy path; numba
import failure falls back silently).  CFQ_THREADS caps numba parallelism.
Both paths consume pre-drawn random arrays, so results are reproducible and
independent of thread count.

States travel as row-major flattened 2x2 matrices: v = (r_ee, r_eg, r_ge, r_gg).
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("CFQ_NUMBA", "1").lower() not in ("0", "false", "no")
if USE_NUMBA:
    try:
        import numba
        from numba import njit, prange
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if not USE_NUMBA:
    prange = range

if USE_NUMBA:
    _threads = os.environ.get("CFQ_THREADS")
    if _threads:
        numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))


TINY_TRACE = 1e-300


# ---------------------------------------------------------------------------
# Photon-counting unraveling (physical measure)
# ---------------------------------------------------------------------------

def _jump_chunk_impl(v, m_nc, m_half, uniforms, step0, stride, obs):
    n_paths, n_sub = uniforms.shape
    for ip in prange(n_paths):
        s = v[ip].copy()
        for k in range(n_sub):
            w = m_nc @ s
            tr = (w[0] + w[3]).real
            if uniforms[ip, k] < 1.0 - tr:
                h = m_half @ s
                h2 = np.zeros(4, dtype=np.complex128)
                h2[3] = h[0]  # sigma_- rho sigma_+
                s = m_half @ h2
            else:
                s = w
            t2 = (s[0] + s[3]).real
            s = s / t2
            g = step0 + k + 1
            if g % stride == 0:
                j = g // stride
                obs[ip, j, 0] = 2.0 * s[1].real
                obs[ip, j, 1] = -2.0 * s[1].imag
                obs[ip, j, 2] = (s[0] - s[3]).real
        v[ip] = s


def _jump_chunk_numpy(v, m_nc, m_half, uniforms, step0, stride, obs):
    n_paths, n_sub = uniforms.shape
    mt = m_nc.T
    ht = m_half.T
    for k in range(n_sub):
        w = v @ mt
        tr = (w[:, 0] + w[:, 3]).real
        click = uniforms[:, k] < 1.0 - tr
        if click.any():
            h = v[click] @ ht
            h2 = np.zeros_like(h)
            h2[:, 3] = h[:, 0]
            w[click] = h2 @ ht
        t2 = (w[:, 0] + w[:, 3]).real
        v[:] = w / t2[:, None]
        g = step0 + k + 1
        if g % stride == 0:
            j = g // stride
            obs[:, j, 0] = 2.0 * v[:, 1].real
            obs[:, j, 1] = -2.0 * v[:, 1].imag
            obs[:, j, 2] = (v[:, 0] - v[:, 3]).real


# ---------------------------------------------------------------------------
# Y-homodyne unraveling (physical measure, normalized nonlinear step)
# ---------------------------------------------------------------------------

def _homodyne_chunk_impl(v, m_lin, coef, dws, step0, stride, obs):
    n_paths, n_sub = dws.shape
    for ip in prange(n_paths):
        s = v[ip].copy()
        for k in range(n_sub):
            sy = -2.0 * s[1].imag
            n0 = -sy * s[0]
            n1 = -1j * s[0] - sy * s[1]
            n2 = 1j * s[0] - sy * s[2]
            n3 = 1j * (s[1] - s[2]) - sy * s[3]
            w = m_lin @ s
            c = coef * dws[ip, k]
            s0 = w[0] + c * n0
            s1 = w[1] + c * n1
            s2 = w[2] + c * n2
            s3 = w[3] + c * n3
            tr = (s0 + s3).real
            s = np.array([s0 / tr, s1 / tr, s2 / tr, s3 / tr])
            g = step0 + k + 1
            if g % stride == 0:
                j = g // stride
                obs[ip, j, 0] = 2.0 * s[1].real
                obs[ip, j, 1] = -2.0 * s[1].imag
                obs[ip, j, 2] = (s[0] - s[3]).real
        v[ip] = s


def _homodyne_chunk_numpy(v, m_lin, coef, dws, step0, stride, obs):
    n_paths, n_sub = dws.shape
    mt = m_lin.T
    for k in range(n_sub):
        sy = -2.0 * v[:, 1].imag
        noise = np.empty_like(v)
        noise[:, 0] = -sy * v[:, 0]
        noise[:, 1] = -1j * v[:, 0] - sy * v[:, 1]
        noise[:, 2] = 1j * v[:, 0] - sy * v[:, 2]
        noise[:, 3] = 1j * (v[:, 1] - v[:, 2]) - sy * v[:, 3]
        w = v @ mt + (coef * dws[:, k])[:, None] * noise
        tr = (w[:, 0] + w[:, 3]).real
        v[:] = w / tr[:, None]
        g = step0 + k + 1
        if g % stride == 0:
            j = g // stride
            obs[:, j, 0] = 2.0 * v[:, 1].real
            obs[:, j, 1] = -2.0 * v[:, 1].imag
            obs[:, j, 2] = (v[:, 0] - v[:, 3]).real


# ---------------------------------------------------------------------------
# Forward/backward weak-value sweeps for the suspectation curve
# ---------------------------------------------------------------------------

def _suspect_sweeps_impl(click_idx, click_cnt, rho0, p_fwd, p_back, n_steps,
                         stride, wv, valid):
    n_rec = click_cnt.shape[0]
    n_out = n_steps // stride + 1
    for ir in prange(n_rec):
        clicked = np.zeros(n_steps, dtype=np.bool_)
        for c in range(click_cnt[ir]):
            clicked[click_idx[ir, c]] = True
        ok = True
        e_store = np.empty((n_out, 4), dtype=np.complex128)
        e = np.zeros(4, dtype=np.complex128)
        e[0] = 1.0
        e[3] = 1.0
        if n_steps % stride == 0:
            e_store[n_out - 1] = e
        for i in range(n_steps - 1, -1, -1):
            if clicked[i]:
                enew = np.zeros(4, dtype=np.complex128)
                enew[0] = e[3]  # sigma_+ E sigma_-
                e = enew
            else:
                e = p_back @ e
            tr = (e[0] + e[3]).real
            if tr < TINY_TRACE:
                ok = False
                break
            e = e / tr
            if i % stride == 0:
                e_store[i // stride] = e
        if not ok:
            valid[ir] = False
            continue
        s = rho0.copy()
        for i in range(n_steps + 1):
            if i % stride == 0:
                j = i // stride
                e0 = e_store[j, 0]
                e1 = e_store[j, 1]
                e3 = e_store[j, 3]
                den = (e0 * s[0] + e1 * s[2] + e_store[j, 2] * s[1] + e3 * s[3]).real
                if den < 1e-12:
                    ok = False
                    break
                num = (1j * (e1 * s[0] + e3 * s[1])).real
                wv[ir, j] = 2.0 * num / den
            if i == n_steps:
                break
            if clicked[i]:
                snew = np.zeros(4, dtype=np.complex128)
                snew[3] = s[0]
                s = snew
            else:
                s = p_fwd @ s
            tr = (s[0] + s[3]).real
            if tr < TINY_TRACE:
                ok = False
                break
            s = s / tr
        valid[ir] = ok


def _suspect_sweeps_numpy(click_idx, click_cnt, rho0, p_fwd, p_back, n_steps,
                          stride, wv, valid):
    n_rec = click_cnt.shape[0]
    n_out = n_steps // stride + 1
    clicked = np.zeros((n_rec, n_steps), dtype=bool)
    for ir in range(n_rec):
        clicked[ir, click_idx[ir, : click_cnt[ir]]] = True
    e_store = np.empty((n_rec, n_out, 4), dtype=np.complex128)
    e = np.zeros((n_rec, 4), dtype=np.complex128)
    e[:, 0] = 1.0
    e[:, 3] = 1.0
    ok = np.ones(n_rec, dtype=bool)
    if n_steps % stride == 0:
        e_store[:, n_out - 1] = e
    pbt = p_back.T
    for i in range(n_steps - 1, -1, -1):
        w = e @ pbt
        m = clicked[:, i]
        if m.any():
            w[m] = 0.0
            w[m, 0] = e[m, 3]
        tr = (w[:, 0] + w[:, 3]).real
        dead = tr < TINY_TRACE
        ok &= ~dead
        tr[dead] = 1.0
        e = w / tr[:, None]
        if i % stride == 0:
            e_store[:, i // stride] = e
    s = np.tile(rho0, (n_rec, 1))
    pft = p_fwd.T
    for i in range(n_steps + 1):
        if i % stride == 0:
            j = i // stride
            es = e_store[:, j]
            den = (es[:, 0] * s[:, 0] + es[:, 1] * s[:, 2]
                   + es[:, 2] * s[:, 1] + es[:, 3] * s[:, 3]).real
            bad = den < 1e-12
            ok &= ~bad
            den[bad] = 1.0
            num = (1j * (es[:, 1] * s[:, 0] + es[:, 3] * s[:, 1])).real
            wv[:, j] = 2.0 * num / den
        if i == n_steps:
            break
        w = s @ pft
        m = clicked[:, i]
        if m.any():
            w[m] = 0.0
            w[m, 3] = s[m, 0]
        tr = (w[:, 0] + w[:, 3]).real
        dead = tr < TINY_TRACE
        ok &= ~dead
        tr[dead] = 1.0
        s = w / tr[:, None]
    valid[:] = ok


# ---------------------------------------------------------------------------
# Bloch-angle SDE paths (linear/ostensible measure with survival weights)
# ---------------------------------------------------------------------------

def _theta_chunk_impl(v, logw, m_gen, coef, dws):
    n_paths, n_sub = dws.shape
    for ip in prange(n_paths):
        s = v[ip].copy()
        acc = logw[ip]
        for k in range(n_sub):
            n0 = 0.0j
            n1 = -1j * s[0]
            n2 = 1j * s[0]
            n3 = 1j * (s[1] - s[2])
            w = m_gen @ s
            c = coef * dws[ip, k]
            s0 = w[0] + c * n0
            s1 = w[1] + c * n1
            s2 = w[2] + c * n2
            s3 = w[3] + c * n3
            tr = (s0 + s3).real
            acc += np.log(tr)
            s = np.array([s0 / tr, s1 / tr, s2 / tr, s3 / tr])
        v[ip] = s
        logw[ip] = acc


def _theta_chunk_numpy(v, logw, m_gen, coef, dws):
    n_paths, n_sub = dws.shape
    mt = m_gen.T
    for k in range(n_sub):
        noise = np.empty_like(v)
        noise[:, 0] = 0.0
        noise[:, 1] = -1j * v[:, 0]
        noise[:, 2] = 1j * v[:, 0]
        noise[:, 3] = 1j * (v[:, 1] - v[:, 2])
        w = v @ mt + (coef * dws[:, k])[:, None] * noise
        tr = (w[:, 0] + w[:, 3]).real
        logw += np.log(tr)
        v[:] = w / tr[:, None]


if USE_NUMBA:
    _pp = dict(cache=True, parallel=True)
    jump_chunk = njit(**_pp)(_jump_chunk_impl)
    homodyne_chunk = njit(**_pp)(_homodyne_chunk_impl)
    suspect_sweeps = njit(**_pp)(_suspect_sweeps_impl)
    theta_chunk = njit(**_pp)(_theta_chunk_impl)
else:
    jump_chunk = _jump_chunk_numpy
    homodyne_chunk = _homodyne_chunk_numpy
    suspect_sweeps = _suspect_sweeps_numpy
    theta_chunk = _theta_chunk_numpy


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
