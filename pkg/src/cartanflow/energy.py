"""Particle-system potentials (DW4, LJ13, LJ55) and the random-walk Metropolis
sampler used to generate raw datasets.

Both energies implement the printed formulas

    U_DW = 1/(2 tau) * sum_{i<j} a(d_ij - d0) - b(d_ij - d0)^2 + c(d_ij - d0)^4
    U_LJ = eps/(2 tau) * sum_{i<j} (r_m/d_ij)^6 - 2 (r_m/d_ij)^12

over unordered pairs i < j. Note the sign pattern: the quadratic DW term
carries a minus sign and the LJ well is inverted relative to the standard
Lennard-Jones form (which has the repulsive 12-term positive). The default
parameters below therefore flip signs relative to the published reference
values (b = +4 instead of -4, eps = -1 instead of +1) so that the *realized*
potentials have the reference double-well shape and a repulsive LJ core;
without the eps flip the LJ energy diverges to -infinity at coincidence and
walkers collapse. All parameters are overridable through the config surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LJ_CLAMP_FACTOR = 1e-3


@dataclass(frozen=True)
class DWParams:
    a: float = 0.0
    b: float = 4.0
    c: float = 0.9
    d0: float = 4.0
    tau: float = 1.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")


@dataclass(frozen=True)
class LJParams:
    eps: float = -1.0
    r_m: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.r_m <= 0:
            raise ValueError("r_m must be positive")


@dataclass(frozen=True)
class McmcConfig:
    walkers: int = 100
    burnin_steps: int = 2000
    samples_per_walker: int = 100
    proposal_std: float = 0.3
    seed: int = 0
    thinning: int = 10

    def __post_init__(self):
        for name in ("walkers", "burnin_steps", "samples_per_walker", "thinning"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.proposal_std <= 0:
            raise ValueError("proposal_std must be positive")


def _pair_distances(positions, n_particles, dim):
    pts = np.asarray(positions, dtype=float).reshape(n_particles, dim)
    iu, ju = np.triu_indices(n_particles, k=1)
    diff = pts[iu] - pts[ju]
    return np.sqrt(np.sum(diff * diff, axis=1))


def dw_energy(positions, params=DWParams(), n_particles=4):
    """Double-well pair energy for particles in R^2."""
    d = _pair_distances(positions, n_particles, 2)
    e = d - params.d0
    terms = params.a * e - params.b * e**2 + params.c * e**4
    return float(terms.sum() / (2.0 * params.tau))


def lj_energy(positions, params=LJParams(), n_particles=13):
    """Lennard-Jones-type pair energy for particles in R^3.

    Distances are clamped at 1e-3 * r_m so proposals that push particles onto
    each other stay finite (and, with a repulsive core, get rejected).
    """
    d = _pair_distances(positions, n_particles, 3)
    d = np.maximum(d, LJ_CLAMP_FACTOR * params.r_m)
    x = params.r_m / d
    x6 = x**6
    terms = x6 - 2.0 * x6 * x6
    return float(params.eps * terms.sum() / (2.0 * params.tau))


def dw_init(n_particles=4, d0=4.0):
    """I.i.d. Gaussian initialization, std = d0."""
    def init(rng):
        return rng.normal(0.0, d0, size=n_particles * 2)
    return init


def lj_init(n_particles=13, r_m=1.0):
    """Jittered cubic lattice with spacing 0.5 * r_m * n^(1/3)."""
    spacing = 0.5 * r_m * n_particles ** (1.0 / 3.0)
    side = int(np.ceil(n_particles ** (1.0 / 3.0)))
    grid = np.array([(i, j, k) for i in range(side)
                     for j in range(side) for k in range(side)][:n_particles],
                    dtype=float)
    grid -= grid.mean(axis=0)

    def init(rng):
        jitter = rng.normal(0.0, 0.05 * r_m, size=(n_particles, 3))
        return (spacing * grid + jitter).reshape(-1)
    return init


def metropolis_sample(energy_fn, dim, cfg, init_fn):
    """Random-walk Metropolis chains targeting the density prop. to e^{-U}.

    Runs cfg.walkers independent chains with isotropic Gaussian proposals
    (std = proposal_std), acceptance min(1, exp(U(x) - U(x'))). Each walker
    draws from its own substream seeded by cfg.seed XOR walker index, making
    the output fully deterministic and ordered by (walker, sample) index.
    After the burn-in, one sample is recorded every cfg.thinning steps.

    Returns (samples, acceptance_rate) with samples shaped
    (walkers * samples_per_walker, dim).
    """
    total_steps = cfg.burnin_steps + cfg.thinning * cfg.samples_per_walker
    out = np.empty((cfg.walkers * cfg.samples_per_walker, dim))
    accepted = 0
    for widx in range(cfg.walkers):
        rng = np.random.default_rng(cfg.seed ^ widx)
        x = np.asarray(init_fn(rng), dtype=float)
        if x.shape != (dim,):
            raise ValueError(f"init_fn must return a vector of length {dim}")
        u_cur = energy_fn(x)
        proposals = rng.normal(0.0, cfg.proposal_std, size=(total_steps, dim))
        log_unif = np.log(rng.random(total_steps))
        row = widx * cfg.samples_per_walker
        recorded = 0
        for step in range(total_steps):
            x_new = x + proposals[step]
            u_new = energy_fn(x_new)
            if log_unif[step] < u_cur - u_new:
                x = x_new
                u_cur = u_new
                accepted += 1
            if step >= cfg.burnin_steps and (step - cfg.burnin_steps + 1) % cfg.thinning == 0:
                out[row + recorded] = x
                recorded += 1
    rate = accepted / (cfg.walkers * total_steps)
    return out, rate
