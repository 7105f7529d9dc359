"""Population dynamics for the Anderson model on the d-regular tree.

With i.i.d. vertex potentials b and edge couplings a, the cavity
m-function at a directed edge satisfies in distribution

    m = 1 / (-z + b - sum_{i=1}^{d-1} a_i^2 m_i),

with the m_i independent copies.  A pool of N samples evolved by
synchronous sweeps of this map approximates the stationary law; vertex
Green's functions are sampled the same way with d neighbor terms.  The
half-Thouless combination

    F(z) = (d/2 - 1) E[log G] - (d/2) E[log m]

equals the log-potential of the ensemble density of states; it is
verified here through its derivative identity F' = -E[G], its large-z
normalization F ~ log(-z), and exact degeneration to the periodic
solver for constant distributions.  All randomness comes from one
seeded PCG64 generator consumed in a fixed order, so runs are
bit-reproducible per seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalError


@dataclass(frozen=True)
class Distribution:
    """A bounded scalar law: constant, uniform, or finite discrete."""

    kind: str
    params: tuple

    @property
    def is_constant(self) -> bool:
        if self.kind == "const":
            return True
        if self.kind == "uniform":
            return self.params[0] == self.params[1]
        return len(self.params[0]) == 1

    def bounds(self) -> tuple[float, float]:
        if self.kind == "const":
            return self.params[0], self.params[0]
        if self.kind == "uniform":
            return self.params
        vals = self.params[0]
        return min(vals), max(vals)

    def sample(self, rng, size):
        if self.kind == "const":
            return np.full(size, self.params[0])
        if self.kind == "uniform":
            return rng.uniform(self.params[0], self.params[1], size)
        vals = np.asarray(self.params[0])
        w = np.asarray(self.params[1])
        return vals[rng.choice(vals.shape[0], size=size, p=w)]


def constant(c: float) -> Distribution:
    return Distribution("const", (float(c),))


def uniform(lo: float, hi: float) -> Distribution:
    if not hi >= lo:
        raise ValueError(f"uniform bounds out of order: [{lo}, {hi}]")
    return Distribution("uniform", (float(lo), float(hi)))


def discrete(values, weights) -> Distribution:
    vals = tuple(float(v) for v in values)
    w = np.asarray(weights, dtype=float)
    if len(vals) == 0 or w.shape[0] != len(vals):
        raise ValueError("discrete law needs matching values and weights")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("discrete weights must be nonnegative with positive sum")
    w = w / w.sum()
    return Distribution("discrete", (vals, tuple(w.tolist())))


def parse_distribution(text: str) -> Distribution:
    """Parse a CLI distribution descriptor.

    Forms: "const,C", "uniform,LO,HI", "discrete,V:W,V:W,...".
    """
    parts = [s.strip() for s in text.split(",")]
    head = parts[0].lower()
    try:
        if head in ("const", "constant"):
            if len(parts) != 2:
                raise ValueError
            return constant(float(parts[1]))
        if head == "uniform":
            if len(parts) != 3:
                raise ValueError
            return uniform(float(parts[1]), float(parts[2]))
        if head == "discrete":
            if len(parts) < 2:
                raise ValueError
            vals, ws = [], []
            for item in parts[1:]:
                v, w = item.split(":")
                vals.append(float(v))
                ws.append(float(w))
            return discrete(vals, ws)
    except ValueError as exc:
        raise ValueError(f"malformed distribution descriptor {text!r}") from exc
    raise ValueError(
        f"unknown distribution kind {parts[0]!r}; expected const, uniform, "
        "or discrete"
    )


@dataclass(frozen=True)
class AndersonConfig:
    d: int
    b_dist: Distribution
    a_dist: Distribution
    pool_size: int = 10_000
    sweeps: int = 200
    seed: int = 0


def validate_config(cfg: AndersonConfig) -> None:
    if cfg.d < 2:
        raise ValueError(f"degree d = {cfg.d} must be at least 2")
    if cfg.pool_size < 2:
        raise ValueError("pool_size must be at least 2")
    if cfg.sweeps < 8:
        raise ValueError("sweeps must be at least 8")
    a_lo, a_hi = cfg.a_dist.bounds()
    if not (np.isfinite(a_lo) and np.isfinite(a_hi)) or a_lo <= 0:
        raise ValueError(
            f"coupling distribution support [{a_lo}, {a_hi}] must be bounded "
            "away from 0"
        )
    b_lo, b_hi = cfg.b_dist.bounds()
    if not (np.isfinite(b_lo) and np.isfinite(b_hi)):
        raise ValueError("potential distribution support must be bounded")


@dataclass
class PopulationState:
    """A converged (or flagged) population of cavity m-samples."""

    z: complex
    pool: np.ndarray
    sweep_count: int
    stationary: bool
    stationarity_gap: float


def _batch_sem(batches: np.ndarray) -> float:
    # standard error of the mean of complex batch means
    n = batches.shape[0]
    if n < 2:
        return float("inf")
    vr = batches.real.var(ddof=1) + batches.imag.var(ddof=1)
    return float(np.sqrt(vr / n))


def _run(cfg: AndersonConfig, z: complex):
    """Evolve the pool and record post-burn-in batch means per sweep.

    Returns (state, logm_batches, logG_batches, G_batches).  Sweeps are
    synchronous: every new pool is built entirely from the previous
    one, which keeps the update order irrelevant and runs reproducible.
    """
    validate_config(cfg)
    z = complex(z)
    if z.imag <= 0:
        raise NumericalError(f"population dynamics requires Im z > 0 (z = {z})")
    rng = np.random.default_rng(cfg.seed)
    N = cfg.pool_size
    d = cfg.d
    pool = np.full(N, -1.0 / z, dtype=np.complex128)
    burn = cfg.sweeps // 2
    logm, logG, Gm = [], [], []
    for sweep in range(cfg.sweeps):
        idx = rng.integers(0, N, size=(N, d - 1))
        b = cfg.b_dist.sample(rng, N)
        a2 = cfg.a_dist.sample(rng, (N, d - 1)) ** 2
        pool = kernels.schur_samples(pool, idx, b, a2, z)
        if np.any(pool.imag <= 0):
            raise NumericalError(
                f"pool member left the upper half plane at sweep {sweep}; "
                "this indicates a bug"
            )
        if sweep >= burn:
            idx_g = rng.integers(0, N, size=(N, d))
            b_g = cfg.b_dist.sample(rng, N)
            a2_g = cfg.a_dist.sample(rng, (N, d)) ** 2
            G = kernels.schur_samples(pool, idx_g, b_g, a2_g, z)
            if np.any(G.imag <= 0):
                raise NumericalError(
                    f"Green's sample left the upper half plane at sweep {sweep}; "
                    "this indicates a bug"
                )
            logm.append(complex(np.mean(np.log(pool))))
            logG.append(complex(np.mean(np.log(G))))
            Gm.append(complex(np.mean(G)))
    logm = np.asarray(logm)
    logG = np.asarray(logG)
    Gm = np.asarray(Gm)

    half = logm.shape[0] // 2
    gap = abs(complex(logm[:half].mean() - logm[half:].mean()))
    sem_halves = np.sqrt(
        _batch_sem(logm[:half]) ** 2 + _batch_sem(logm[half:]) ** 2
    )
    deterministic = cfg.b_dist.is_constant and cfg.a_dist.is_constant
    stationary = bool(gap <= sem_halves) or deterministic
    state = PopulationState(z, pool, cfg.sweeps, stationary, float(gap))
    return state, logm, logG, Gm


def population_run(cfg: AndersonConfig, z: complex) -> PopulationState:
    """Run the sweeps at one z and return the final population."""
    return _run(cfg, z)[0]


@dataclass
class HalfThoulessEstimate:
    """Monte Carlo estimate of F(z) with batch-means error bars."""

    z: complex
    F: complex
    stderr: float
    E_logG: complex
    E_logm: complex
    E_G: complex
    stderr_logG: float
    stderr_logm: float
    stderr_G: float
    stationary: bool


def estimate_half_thouless(cfg: AndersonConfig, z: complex) -> HalfThoulessEstimate:
    """Estimate F = (d/2 - 1) E[log G] - (d/2) E[log m] at z.

    All expectations are batch means over the post-burn-in sweeps;
    component standard errors combine in quadrature for F.  A failed
    stationarity diagnostic inflates the error bars instead of raising.
    """
    state, logm, logG, Gm = _run(cfg, z)
    E_logm = complex(logm.mean())
    E_logG = complex(logG.mean())
    E_G = complex(Gm.mean())
    se_m = _batch_sem(logm)
    se_g = _batch_sem(logG)
    se_G = _batch_sem(Gm)
    cg = cfg.d / 2.0 - 1.0
    cm = cfg.d / 2.0
    F = cg * E_logG - cm * E_logm
    se_F = float(np.hypot(cg * se_g, cm * se_m))
    if not state.stationary:
        inflate = max(1.0, state.stationarity_gap / max(se_m, 1e-300))
        se_F *= inflate
        se_m *= inflate
        se_g *= inflate
        se_G *= inflate
    return HalfThoulessEstimate(
        complex(z), F, se_F, E_logG, E_logm, E_G, se_g, se_m, se_G,
        state.stationary,
    )


@dataclass
class DerivativeReport:
    """Central-difference check of F' = -E[G] at one z."""

    z: complex
    h: float
    lhs: complex
    rhs: complex
    difference: float
    stderr: float
    curvature_bound: float
    threshold: float
    passed: bool


def derivative_identity_check(
    cfg: AndersonConfig, z: complex, h: float
) -> DerivativeReport:
    """Compare (F(z+h) - F(z-h)) / 2h against -E[G(z)].

    All five stencil points run with the same seed, so the random
    draws cancel in the difference quotient (common random numbers)
    and the batch-means error of the quotient is computed from paired
    per-sweep differences.  The acceptance threshold is three times
    the combined standard error plus a third-derivative curvature
    bound estimated from the wide stencil.
    """
    z = complex(z)
    h = float(h)
    if not (z.imag > h > 0):
        raise NumericalError(
            f"derivative check requires Im z > h > 0 (z = {z}, h = {h})"
        )
    cg = cfg.d / 2.0 - 1.0
    cm = cfg.d / 2.0

    def f_batches(zz):
        _, logm, logG, _ = _run(cfg, zz)
        return cg * logG - cm * logm

    fp = f_batches(z + h)
    fm = f_batches(z - h)
    fp2 = f_batches(z + 2 * h)
    fm2 = f_batches(z - 2 * h)
    state, _, _, Gm = _run(cfg, z)

    quot = (fp - fm) / (2.0 * h)
    lhs = complex(quot.mean())
    rhs = complex(-Gm.mean())
    se = float(np.hypot(_batch_sem(quot), _batch_sem(Gm)))
    third = (
        complex(fp2.mean()) - 2.0 * complex(fp.mean())
        + 2.0 * complex(fm.mean()) - complex(fm2.mean())
    ) / (2.0 * h**3)
    curvature = (h * h) * abs(third) / 6.0
    diff = abs(lhs - rhs)
    threshold = 3.0 * (se + curvature)
    return DerivativeReport(
        z, h, lhs, rhs, diff, se, curvature, threshold, bool(diff <= threshold)
    )
