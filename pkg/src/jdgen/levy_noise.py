"""Noise model: characteristic exponents and exact samplers.

The forward process adds Gaussian noise of intensity D plus Poisson jumps
at rate lam whose amplitudes follow an isotropic multivariate Laplace law
GL(sigma2, 1).  Everything here is exact-in-distribution sampling or
closed-form evaluation; no time discretization enters.
"""

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConfigError


@dataclass
class ModelConfig:
    """Scalar parameters of the process, the kernel grid, and generation."""

    D: float = 1.0
    lam: float = 1.0
    sigma2: float = 2.0
    T: float = 10.0
    dt: float = 0.1
    d: int = 2
    t_min: float = 0.05
    x_max: float = 10.0
    n_grid: int = 200
    k_max: float = 50.0
    n_quad: int = 2000

    def __post_init__(self):
        if self.D <= 0:
            raise ConfigError(f"D must be positive, got {self.D!r}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam!r}")
        if self.sigma2 <= 0:
            raise ConfigError(f"sigma2 must be positive, got {self.sigma2!r}")
        if self.T <= 0 or self.dt <= 0:
            raise ConfigError("T and dt must be positive")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError(f"dt={self.dt!r} does not divide T={self.T!r}")
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d!r}")
        if not (0 < self.t_min < self.T):
            raise ConfigError(f"t_min must lie in (0, T), got {self.t_min!r}")
        if self.x_max <= 0 or self.n_grid < 2:
            raise ConfigError("x_max must be positive and n_grid >= 2")
        if self.k_max <= 0 or self.n_quad < 1:
            raise ConfigError("k_max must be positive and n_quad >= 1")

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    def to_dict(self):
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**data)


# ---------------------------------------------------------------------------
# Characteristic exponents

def phi_laplace(k, sigma2):
    """Jump characteristic function minus one: 1/(1 + sigma2 k^2/2) - 1."""
    k = np.asarray(k, dtype=np.float64)
    out = 1.0 / (1.0 + 0.5 * sigma2 * k * k) - 1.0
    return float(out) if out.ndim == 0 else out


def psi(k, cfg):
    """Characteristic exponent (D/2) k^2 - lam * phi(k)."""
    k = np.asarray(k, dtype=np.float64)
    out = 0.5 * cfg.D * k * k - cfg.lam * phi_laplace(k, cfg.sigma2)
    return float(out) if out.ndim == 0 else out


def psi_over_k2(k, cfg):
    """psi(k)/k^2 in the cancellation-free form D/2 + lam*s2/(2(1+s2 k^2/2)).

    Finite for all k >= 0 with limit D/2 + lam*sigma2/2 at the origin.
    """
    k = np.asarray(k, dtype=np.float64)
    out = 0.5 * cfg.D + cfg.lam * cfg.sigma2 / (2.0 * (1.0 + 0.5 * cfg.sigma2 * k * k))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Samplers

def sample_gl(sigma2, nu, d, rng, size=None):
    """Isotropic generalized Laplace draw: sqrt(Gamma(nu)) * N(0, sigma2 I)."""
    if sigma2 <= 0 or nu <= 0 or d < 1:
        raise ValueError("need sigma2 > 0, nu > 0, d >= 1")
    n = 1 if size is None else int(size)
    gam = rng.standard_gamma(nu, size=n)
    z = rng.standard_normal((n, d)) * math.sqrt(sigma2)
    out = np.sqrt(gam)[:, None] * z
    return out[0] if size is None else out


def sample_increments(t, sign, cfg, rng, size):
    """Batch of OU-filtered noise increments (gauss, jump), each (size, d).

    gauss ~ N(0, D(1-e^{-t}) I) for sign "-", N(0, D(e^t - 1) I) for "+".
    jump = sum_j A_j e^{+/-(t - tau_j)/2} with M ~ Poisson(lam*t),
    tau_j ~ U[0, t], A_j ~ GL(sigma2, 1).  t may be a scalar or a (size,)
    array of per-row times.
    """
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t <= 0.0):
        raise ValueError("t must be positive")
    t_rows = np.broadcast_to(t, (size,))
    s = 1.0 if sign == "+" else -1.0

    if sign == "-":
        var = cfg.D * (1.0 - np.exp(-t_rows))
    else:
        var = cfg.D * (np.exp(t_rows) - 1.0)
    gauss = rng.standard_normal((size, cfg.d)) * np.sqrt(var)[:, None]

    jump = np.zeros((size, cfg.d))
    if cfg.lam > 0.0:
        m = rng.poisson(cfg.lam * t_rows)
        total = int(m.sum())
        if total > 0:
            owner = np.repeat(np.arange(size), m)
            tau = rng.random(total) * t_rows[owner]
            gam = rng.standard_gamma(1.0, size=total)
            z = rng.standard_normal((total, cfg.d)) * math.sqrt(cfg.sigma2)
            amp = np.sqrt(gam)[:, None] * z
            fac = np.exp(s * 0.5 * (t_rows[owner] - tau))
            contrib = amp * fac[:, None]
            for c in range(cfg.d):
                jump[:, c] = np.bincount(owner, weights=contrib[:, c], minlength=size)
    return gauss, jump


def sample_increment(t, sign, cfg, rng):
    """Single (gauss, jump) increment pair, each a vector of length d."""
    gauss, jump = sample_increments(t, sign, cfg, rng, size=1)
    return gauss[0], jump[0]


def sample_stationary(cfg, rng, size=None):
    """Draw from the stationary law: Z1 + sqrt(Gamma(lam)) Z2.

    Z1 ~ N(0, D I), Z2 ~ N(0, sigma2 I); for lam = 0 this is N(0, D I).
    """
    n = 1 if size is None else int(size)
    z1 = rng.standard_normal((n, cfg.d)) * math.sqrt(cfg.D)
    if cfg.lam > 0.0:
        gam = rng.standard_gamma(cfg.lam, size=n)
        z2 = rng.standard_normal((n, cfg.d)) * math.sqrt(cfg.sigma2)
        z1 = z1 + np.sqrt(gam)[:, None] * z2
    return z1[0] if size is None else z1


def sample_alpha_stable_isotropic(alpha, d, rng, size=None):
    """Isotropic draw with characteristic function e^{-|k|^alpha}.

    Sub-Gaussian subordination: X = sqrt(2 A) Z with Z ~ N(0, I) and A a
    positive (alpha/2)-stable variable with Laplace transform e^{-u^(alpha/2)}
    (Kanter's representation).  alpha = 2 degenerates to N(0, 2I).
    """
    if not (0.0 < alpha <= 2.0):
        raise ValueError(f"alpha must be in (0, 2], got {alpha!r}")
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, d))
    if alpha == 2.0:
        out = math.sqrt(2.0) * z
    else:
        ap = 0.5 * alpha
        theta = rng.random(n) * math.pi
        w = rng.standard_exponential(n)
        a = (
            np.sin(ap * theta)
            * (np.sin((1.0 - ap) * theta) / w) ** ((1.0 - ap) / ap)
            / np.sin(theta) ** (1.0 / ap)
        )
        out = np.sqrt(2.0 * a)[:, None] * z
    return out[0] if size is None else out
