"""Monte-Carlo precession of polarization vectors in white-noise magnetic fields.

Each step draws the integrated rotation vector ``phi = g * int B dt`` with
independent Gaussian components of variance ``dt / (2 tau_aa)`` and applies
the exact rotation generated by ``dP/dt = g P x B``, so for small ``phi``
``P -> P + P x phi``.  Exact rotation keeps ``|P|`` fixed and is the
Stratonovich-consistent discretisation; an Euler update ``P += P x phi``
drifts in norm and is not offered.

Seeding: every trajectory owns a ``numpy.random.Generator`` built from
``SeedSequence(master_seed, spawn_key=(particle, initial_condition, trajectory))``.
The stream of trajectory ``i`` therefore does not depend on how trajectories
are batched or on how many workers run them, and particle 1 and particle 2
never share a stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .analytic_dynamics import NO_NOISE, axis_rates
from .spin_algebra import as_direction, as_polarization

DT_FRACTION = 100
BATCH_SIZE = 500
KICK_CHUNK = 1000

@dataclass(frozen=True)
class NoiseParams:
    """Correlation times of the field components.

    ``g`` is kept for bookkeeping only: the field statistics are specified
    directly as ``g^2 <B_a(t1) B_a(t2)> = delta(t1 - t2) / (2 tau_aa)``.
    """

    tau_xx: float
    tau_yy: float
    tau_zz: float
    g: float = 1.0

    def __post_init__(self):
        for name in ("tau_xx", "tau_yy", "tau_zz"):
            val = getattr(self, name)
            if not val > 0:
                raise ValueError(f"{name} must be > 0, got {val!r}")

    @classmethod
    def isotropic(cls, tau: float, g: float = 1.0) -> "NoiseParams":
        return cls(tau, tau, tau, g)

    @classmethod
    def bloch(cls, tau0: float, tau1: float, g: float = 1.0) -> "NoiseParams":
        """Transverse components at ``tau1``, longitudinal (z) at ``tau0``."""
        return cls(tau1, tau1, tau0, g)

    @property
    def taus(self) -> np.ndarray:
        return np.array([self.tau_xx, self.tau_yy, self.tau_zz])

    @property
    def kick_std_per_sqrt_dt(self) -> np.ndarray:
        return np.array([0.0 if math.isinf(tau) else math.sqrt(0.5 / tau) for tau in self.taus])

    def decay_rates(self) -> np.ndarray:
        return axis_rates(self.tau_xx, self.tau_yy, self.tau_zz)


@dataclass(frozen=True)
class TrajectoryConfig:
    dt: float
    n_steps: int
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt!r}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {self.n_steps!r}")

    def check_against(self, noise: NoiseParams) -> None:
        bound = float(np.min(noise.taus)) / DT_FRACTION
        if self.dt > bound:
            raise ValueError(
                f"dt={self.dt!r} exceeds the bound min(tau_xx, tau_yy, tau_zz)/{DT_FRACTION} = {bound!r}"
            )

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class EnsembleConfig:
    n_traj: int
    master_seed: int = 0
    record_every: int = 1
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be >= 1, got {self.n_traj!r}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every!r}")


@dataclass(frozen=True)
class EnsembleSeries:
    times: np.ndarray
    mean: np.ndarray
    std_err: np.ndarray

    def at(self, t: float, atol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
        idx = np.flatnonzero(np.abs(self.times - t) <= atol * max(1.0, abs(t)))
        if idx.size == 0:
            raise ValueError(f"time {t!r} is not on the recorded grid")
        return self.mean[idx[0]], self.std_err[idx[0]]


def child_seed(master_seed: int, particle: int, initial_condition: int, trajectory: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=(int(particle), int(initial_condition), int(trajectory))
    )


def sample_kick(noise: NoiseParams, dt: float, rng: np.random.Generator, size=None) -> np.ndarray:
    """Integrated rotation vector(s) for one step; shape ``(3,)`` or ``size + (3,)``."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    shape = (3,) if size is None else tuple(np.atleast_1d(size)) + (3,)
    return rng.standard_normal(shape) * (noise.kick_std_per_sqrt_dt * math.sqrt(dt))


def rotate(p: np.ndarray, kick: np.ndarray) -> np.ndarray:
    """Rotate row vectors ``p`` by angle ``|kick|`` about ``-kick`` (right-handed).

    Works on single vectors or stacks of shape ``(n, 3)``.
    """
    angle = np.linalg.norm(kick, axis=-1, keepdims=True)
    safe = np.where(angle > 0.0, angle, 1.0)
    axis = -kick / safe
    cos, sin = np.cos(angle), np.sin(angle)
    k_dot_p = np.sum(axis * p, axis=-1, keepdims=True)
    out = p * cos + np.cross(axis, p) * sin + axis * k_dot_p * (1.0 - cos)
    return np.where(angle > 0.0, out, p)


def step_polarization(p, kick) -> np.ndarray:
    return rotate(np.asarray(p, dtype=float), np.asarray(kick, dtype=float))


def _run_batch(p0: np.ndarray, noise: NoiseParams, cfg: TrajectoryConfig, seeds, record_every: int) -> np.ndarray:
    """Evolve one batch; returns recorded polarizations, shape ``(n_record, n_batch, 3)``."""
    n = len(seeds)
    rngs = [np.random.default_rng(s) for s in seeds]
    scale = noise.kick_std_per_sqrt_dt * math.sqrt(cfg.dt)
    out = np.empty((cfg.n_steps // record_every + 1, n, 3))
    p = np.broadcast_to(p0, (n, 3)).copy()
    out[0] = p
    done = 0
    while done < cfg.n_steps:
        # Each stream is consumed sequentially, so the chunk length does not
        # change the kicks a trajectory sees.
        block = min(KICK_CHUNK, cfg.n_steps - done)
        kicks = np.stack([rng.standard_normal((block, 3)) for rng in rngs], axis=1) * scale
        for k in range(block):
            p = rotate(p, kicks[k])
            done += 1
            if done % record_every == 0:
                out[done // record_every] = p
    return out


def simulate_trajectory(p0, noise: NoiseParams, cfg: TrajectoryConfig) -> np.ndarray:
    """Single trajectory of length ``n_steps + 1``, seeded by ``cfg.seed``."""
    p0 = as_polarization(p0)
    cfg.check_against(noise)
    rng = np.random.default_rng(np.random.SeedSequence(int(cfg.seed)))
    kicks = sample_kick(noise, cfg.dt, rng, size=cfg.n_steps)
    out = np.empty((cfg.n_steps + 1, 3))
    out[0] = p = p0
    for k in range(cfg.n_steps):
        p = rotate(p, kicks[k])
        out[k + 1] = p
    return out


def ensemble_samples(
    p0, noise: NoiseParams, traj_cfg: TrajectoryConfig, ens_cfg: EnsembleConfig, particle: int = 0, initial_condition: int = 0
) -> np.ndarray:
    """Recorded polarizations of every trajectory, shape ``(n_record, n_traj, 3)``.

    ``particle`` and ``initial_condition`` enter the child-seed spawn key.
    """
    p0 = as_polarization(p0)
    traj_cfg.check_against(noise)
    seeds = [
        child_seed(ens_cfg.master_seed, particle, initial_condition, i) for i in range(ens_cfg.n_traj)
    ]
    batches = [seeds[i : i + BATCH_SIZE] for i in range(0, len(seeds), BATCH_SIZE)]
    job = delayed(_run_batch)
    if ens_cfg.n_jobs == 1:
        parts = [_run_batch(p0, noise, traj_cfg, b, ens_cfg.record_every) for b in batches]
    else:
        parts = Parallel(n_jobs=ens_cfg.n_jobs)(
            job(p0, noise, traj_cfg, b, ens_cfg.record_every) for b in batches
        )
    return np.concatenate(parts, axis=1)


def _reduce(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = samples.shape[1]
    mean = samples.mean(axis=1)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=1, ddof=1) / math.sqrt(n)


def ensemble_average(
    p0, noise: NoiseParams, traj_cfg: TrajectoryConfig, ens_cfg: EnsembleConfig
) -> EnsembleSeries:
    """Mean and standard error of P(t) over ``n_traj`` trajectories.

    Only every ``ens_cfg.record_every``-th step is kept.  The reduction is a
    single pass over the full sample array in trajectory order, so results
    are bit-identical for any ``n_jobs``.
    """
    samples = ensemble_samples(p0, noise, traj_cfg, ens_cfg)
    mean, err = _reduce(samples)
    n_record = samples.shape[0]
    times = traj_cfg.dt * ens_cfg.record_every * np.arange(n_record)
    return EnsembleSeries(times=times, mean=mean, std_err=err)


_PAIR_AXES = np.eye(3)


def mc_correlation(
    noise1: NoiseParams,
    noise2: NoiseParams,
    n1,
    n2,
    traj_cfg: TrajectoryConfig,
    ens_cfg: EnsembleConfig,
    t: float,
) -> tuple[float, float]:
    """Monte-Carlo estimate of <sigma_1.n1 sigma_2.n2>(t) for the decaying singlet.

    The singlet is the superposition of the three product initial conditions
    P1 = e_a, P2 = -e_a (a = x, y, z); the two particles see independent
    fields, so the correlation is ``sum_a <P1^a(t).n1> <P2^a(t).n2>``.
    """
    n1, n2 = as_direction(n1), as_direction(n2)
    k = round(t / traj_cfg.dt)
    if t < 0 or abs(k * traj_cfg.dt - t) > 1e-9 * max(traj_cfg.dt, abs(t)):
        raise ValueError(f"t={t!r} is not on the trajectory grid (dt={traj_cfg.dt!r}); no interpolation")
    if k == 0:
        return float(-(n1 @ n2)), 0.0
    cfg = TrajectoryConfig(dt=traj_cfg.dt, n_steps=k, seed=traj_cfg.seed)
    ens = EnsembleConfig(n_traj=ens_cfg.n_traj, master_seed=ens_cfg.master_seed, record_every=k, n_jobs=ens_cfg.n_jobs)
    estimate = 0.0
    variance = 0.0
    for a in range(3):
        s1 = ensemble_samples(_PAIR_AXES[a], noise1, cfg, ens, 1, a)[-1] @ n1
        s2 = ensemble_samples(-_PAIR_AXES[a], noise2, cfg, ens, 2, a)[-1] @ n2
        m1, m2 = s1.mean(), s2.mean()
        n = s1.size
        v1 = s1.var(ddof=1) / n if n > 1 else 0.0
        v2 = s2.var(ddof=1) / n if n > 1 else 0.0
        estimate += m1 * m2
        variance += m2**2 * v1 + m1**2 * v2 + v1 * v2
    return float(estimate), float(math.sqrt(variance))


__all__ = [
    "NO_NOISE",
    "NoiseParams",
    "TrajectoryConfig",
    "EnsembleConfig",
    "EnsembleSeries",
    "child_seed",
    "sample_kick",
    "rotate",
    "step_polarization",
    "simulate_trajectory",
    "ensemble_average",
    "ensemble_samples",
    "mc_correlation",
]
