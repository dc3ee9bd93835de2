"""Closed-form Lyapunov exponent and density of states by adaptive quadrature.

With ``phi(v) = 2 lam v + v^3/6`` and

    I(lam) = int_0^inf v^{-1/2} e^{-phi(v)} dv,   J(lam) = int_0^inf v^{1/2} e^{-phi(v)} dv,

the Lyapunov exponent is ``gamma = J / (2 I)``, the integrated density of
states is ``N = 1 / (sqrt(2 pi) I)`` and its derivative is ``n = 4 gamma N``
(differentiate ``I`` under the integral sign).

The largest value of ``-phi`` is factored out before integrating, so ``I``
and ``J`` are handled as ``exp(E) * (O(1) number)``; ``log_dos_N`` stays
finite far below the point where ``N`` itself underflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError
from .quadrature import integrate

_SQRT_2PI = math.sqrt(2.0 * math.pi)
SADDLE_SWITCH = -10.0


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances of the adaptive rule.

    ``exponent_cutoff`` truncates the integration range where the exponent,
    measured from its maximum, drops below this value.
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    exponent_cutoff: float = -60.0
    max_panels: int = 4000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not 0.0 < v <= 1e-4:
                raise ConfigurationError(f"{name} must lie in (0, 1e-4], got {v}")
        if not self.exponent_cutoff <= -50.0:
            raise ConfigurationError(f"exponent_cutoff must be <= -50, got {self.exponent_cutoff}")


DEFAULT = QuadratureConfig()


@dataclass(frozen=True)
class MomentIntegrals:
    """``I = exp(shift) * i_scaled`` and ``J = exp(shift) * j_scaled`` with error estimates."""

    lam: float
    shift: float
    i_scaled: float
    j_scaled: float
    i_err: float
    j_err: float

    @property
    def gamma(self) -> float:
        return self.j_scaled / (2.0 * self.i_scaled)

    @property
    def gamma_rel_err(self) -> float:
        return self.i_err / self.i_scaled + self.j_err / self.j_scaled

    @property
    def log_N(self) -> float:
        return -self.shift - math.log(_SQRT_2PI * self.i_scaled)


def _check_lam(lam):
    lam = float(lam)
    if not math.isfinite(lam):
        raise ConfigurationError(f"lam must be finite, got {lam}")
    return lam


def moment_integrals(lam: float, cfg: QuadratureConfig = DEFAULT) -> MomentIntegrals:
    lam = _check_lam(lam)
    depth = -cfg.exponent_cutoff
    tol = dict(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, max_panels=cfg.max_panels)
    if lam < 0.0:
        vs = 2.0 * math.sqrt(-lam)
        shift = (8.0 / 3.0) * (-lam) ** 1.5

        def excess(u):
            # phi(vs + u) - phi(vs), expanded about the minimum to avoid cancellation
            return 0.5 * vs * u * u + u * u * u / 6.0
    else:
        vs = 0.0
        shift = 0.0

        def excess(u):
            return 2.0 * lam * u + u * u * u / 6.0

    u_hi = brentq(lambda u: excess(u) - depth, 0.0, 1.0 + 2.0 * depth + (6 * depth) ** (1 / 3) + vs)
    if lam <= SADDLE_SWITCH and excess(-vs) > depth:
        # peaked integrand far from the origin: integrate in u = v - vs
        u_lo = brentq(lambda u: excess(u) - depth, -vs, 0.0)
        width = 1.0 / math.sqrt(0.5 * vs)
        bp = np.unique(np.concatenate([np.linspace(u_lo, 0.0, 5), np.linspace(0.0, u_hi, 5),
                                       np.clip([-2 * width, -width, width, 2 * width], u_lo, u_hi)]))

        def f(u):
            v = vs + u
            g = np.exp(-excess(u))
            sv = np.sqrt(v)
            return np.stack([g / sv, g * sv])
        (i_s, j_s), (ie, je) = integrate(f, bp, **tol)
    else:
        # v = w^2 removes the endpoint singularity: I = 2 int e^{-phi(w^2)} dw, J = 2 int w^2 e^{-phi(w^2)} dw
        w_hi = math.sqrt(vs + u_hi)
        bp = np.linspace(0.0, w_hi, 9)
        if vs > 0.0:
            bp = np.unique(np.append(bp, math.sqrt(vs)))

        def f(w):
            g = np.exp(-excess(w * w - vs))
            return np.stack([2.0 * g, 2.0 * w * w * g])
        (i_s, j_s), (ie, je) = integrate(f, bp, **tol)
    return MomentIntegrals(lam, shift, float(i_s), float(j_s), float(ie), float(je))


def gamma_exact(lam: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """Lyapunov exponent ``J / (2 I)``."""
    return moment_integrals(lam, cfg).gamma


def gamma_exact_with_error(lam: float, cfg: QuadratureConfig = DEFAULT) -> tuple[float, float]:
    m = moment_integrals(lam, cfg)
    return m.gamma, m.gamma * m.gamma_rel_err


def log_dos_N(lam: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """``ln N(lam)``; finite for any finite ``lam``."""
    return moment_integrals(lam, cfg).log_N


def dos_N_exact(lam: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """Integrated density of states ``1 / (sqrt(2 pi) I)`` (underflows to 0 below about -42.7)."""
    return math.exp(log_dos_N(lam, cfg))


def dos_N_exact_with_error(lam: float, cfg: QuadratureConfig = DEFAULT) -> tuple[float, float]:
    m = moment_integrals(lam, cfg)
    N = math.exp(m.log_N)
    return N, N * m.i_err / m.i_scaled


def dos_n_exact(lam: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """Density of states ``n = 4 gamma N``."""
    m = moment_integrals(lam, cfg)
    return 4.0 * m.gamma * math.exp(m.log_N)


def log_dos_n(lam: float, cfg: QuadratureConfig = DEFAULT) -> float:
    m = moment_integrals(lam, cfg)
    return math.log(4.0 * m.gamma) + m.log_N


def dos_table(lams, cfg: QuadratureConfig = DEFAULT) -> list[tuple[float, float, float, float]]:
    """Rows ``(lam, gamma, N, n)``."""
    rows = []
    for lam in lams:
        m = moment_integrals(lam, cfg)
        N = math.exp(m.log_N)
        rows.append((float(lam), m.gamma, N, 4.0 * m.gamma * N))
    return rows


def dos_laplace_transform(t: float, cfg: QuadratureConfig = DEFAULT,
                          rel_tol: float = 1e-8) -> tuple[float, float]:
    """``int e^{-lam t} n(lam) dlam`` over the real line, with an error estimate.

    The range is cut where the log-integrand falls ``-exponent_cutoff`` below
    its maximum; the Lifshitz tail makes the left cut superexponentially safe.
    """
    if not t > 0:
        raise ConfigurationError(f"t must be positive, got {t}")
    depth = -cfg.exponent_cutoff

    def log_f(lam):
        return -lam * t + log_dos_n(lam, cfg)

    # locate the peak on a coarse scan, then walk out to the cut on both sides
    scan = np.linspace(-10.0, 10.0, 81)
    vals = np.array([log_f(x) for x in scan])
    peak = float(vals.max())
    lo = float(scan[vals.argmax()])
    step = 1.0
    while log_f(lo) > peak - depth:
        lo -= step
    hi = float(scan[vals.argmax()])
    while -hi * t + math.log(max(hi, 1.0)) > peak - depth - 2.0 or log_f(hi) > peak - depth:
        hi += max(step, 0.25 * hi)

    def f(lams):
        out = np.empty_like(lams)
        for idx, x in np.ndenumerate(lams):
            out[idx] = math.exp(log_f(x) - peak)
        return out

    bp = np.unique(np.concatenate([np.linspace(lo, hi, 17), [0.0] if lo < 0.0 < hi else []]))
    val, err = integrate(f, bp, rel_tol=rel_tol, abs_tol=1e-300, max_panels=cfg.max_panels)
    scale = math.exp(peak)
    return val * scale, err * scale
