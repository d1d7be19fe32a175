"""Seeded random streams and the exact samplers used by the simulators.

Every stream is a PCG64 generator keyed by ``(seed, stream_id)`` through
``numpy.random.SeedSequence``; the stream id enters as the spawn key, so
streams are split by hashing and replicate ``k`` always sees the same draws
no matter which worker runs it.

The samplers are numba functions taking the generator directly, which keeps a
single code path for scalar calls from Python and for the simulation kernels.
"""
from __future__ import annotations

import math

import numba
import numpy as np

from .errors import DomainError
from .model import MAX_RATE

# inversion below this rate, transformed rejection (PTRS) above
INVERSION_CUTOFF = 10.0

_MASK64 = (1 << 64) - 1


class RngStream:
    """Deterministic random stream identified by ``(seed, stream_id)``."""

    def __init__(self, seed: int, stream_id: int = 0):
        seed, stream_id = int(seed), int(stream_id)
        if not (0 <= seed <= _MASK64 and 0 <= stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = seed
        self.stream_id = stream_id
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def child(self, *key: int) -> "RngStream":
        """Stream for a sub-task, derived from this stream's identity and ``key``."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id, *[int(k) for k in key]))
        return RngStream(self.seed, int(ss.generate_state(1, np.uint64)[0]))

    def uniform(self, size=None):
        return self.generator.random(size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)


# ---------------------------------------------------------------------------
# kernels


@numba.njit(cache=True)
def _poisson_inversion(gen, lam):
    # sequential search on the cdf from 0
    p = math.exp(-lam)
    s = p
    u = gen.random()
    k = 0
    while u > s:
        k += 1
        p *= lam / k
        s += p
        if p == 0.0 and s < u:
            # cdf rounding stall; the remaining mass is below double precision
            break
    return k


@numba.njit(cache=True)
def _poisson_ptrs(gen, lam):
    # Hormann's transformed rejection with squeeze
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = gen.random() - 0.5
        v = gen.random()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= -lam + k * loglam - math.lgamma(k + 1.0)):
            return int(k)


@numba.njit(cache=True)
def _poisson(gen, lam):
    if lam == 0.0:
        return 0
    if lam < INVERSION_CUTOFF:
        return _poisson_inversion(gen, lam)
    return _poisson_ptrs(gen, lam)


@numba.njit(cache=True)
def _coupled_poisson(gen, lam1, lam2):
    """Thinning coupling: shared Poisson(min) draw plus Poisson(|gap|) excess."""
    if lam1 <= lam2:
        y = _poisson(gen, lam1)
        v = _poisson(gen, lam2 - lam1)
        return y, y + v, 1 if v == 0 else 0
    y2 = _poisson(gen, lam2)
    v = _poisson(gen, lam1 - lam2)
    return y2 + v, y2, 1 if v == 0 else 0


@numba.njit(cache=True)
def _poisson_many(gen, lam, n):
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = _poisson(gen, lam)
    return out


@numba.njit(cache=True)
def _coupled_many(gen, lam1, lam2, n):
    y1 = np.empty(n, dtype=np.int64)
    y2 = np.empty(n, dtype=np.int64)
    u = np.empty(n, dtype=np.int64)
    for i in range(n):
        y1[i], y2[i], u[i] = _coupled_poisson(gen, lam1, lam2)
    return y1, y2, u


@numba.njit(cache=True)
def _gaussian_many(gen, sd, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = sd * gen.standard_normal()
    return out


# ---------------------------------------------------------------------------
# public samplers


def _check_rate(lam) -> float:
    lam = float(lam)
    if not (lam >= 0 and math.isfinite(lam)):
        raise DomainError(f"Poisson rate must be nonnegative and finite, got {lam}")
    if lam > MAX_RATE:
        raise DomainError(f"Poisson rate {lam:g} exceeds the overflow guard {MAX_RATE:g}")
    return lam


def sample_poisson(rng: RngStream, lam, size=None):
    """Exact Poisson(``lam``) draw(s)."""
    lam = _check_rate(lam)
    if size is None:
        return int(_poisson(rng.generator, lam))
    return _poisson_many(rng.generator, lam, int(size))


def sample_coupled_poisson(rng: RngStream, lambda1, lambda2, size=None):
    """Draw ``(Y, Y', U)`` with Poisson(``lambda1``), Poisson(``lambda2``) marginals.

    The smaller rate gets a plain draw and the other coordinate adds an
    independent Poisson(``|lambda1 - lambda2|``) excess ``V``; ``U = 1{V = 0}``
    so ``P(U = 1) = exp(-|lambda1 - lambda2|)``.
    """
    lam1, lam2 = _check_rate(lambda1), _check_rate(lambda2)
    if size is None:
        y1, y2, u = _coupled_poisson(rng.generator, lam1, lam2)
        return int(y1), int(y2), int(u)
    return _coupled_many(rng.generator, lam1, lam2, int(size))


def sample_gaussian(rng: RngStream, variance, size=None):
    """Exact N(0, ``variance``) draw(s) via the generator's ziggurat normal."""
    variance = float(variance)
    if not (variance > 0 and math.isfinite(variance)):
        raise DomainError(f"variance must be positive and finite, got {variance}")
    sd = math.sqrt(variance)
    if size is None:
        return float(_gaussian_many(rng.generator, sd, 1)[0])
    return _gaussian_many(rng.generator, sd, int(size))
