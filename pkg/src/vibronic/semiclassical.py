"""Closed-form saturation, incoherent-pump and mean-field results.

All rates and detunings are nu = omega / 2pi in GHz, like ModelParams.
Every formula here is a ratio of frequencies, so the 2pi factors cancel
except in the explicitly dimensional rates, which are returned as nu too.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvergenceError
from .model import ModelParams

__all__ = [
    "SaturationResult",
    "resonant_saturation",
    "incoherent_pump_rate",
    "incoherent_population",
    "StokesFigures",
    "stokes_figures",
    "transducer_susceptibility",
    "transduction_rate",
    "chi_map",
    "MeanFieldState",
    "meanfield_steady_state",
    "meanfield_dynamics",
]


@dataclass(frozen=True)
class SaturationResult:
    n_zpl: float
    population: float
    rate: float  # p_click * gamma0 * eta^2 * population, in GHz (nu)


def resonant_saturation(omega_zpl_rabi: float, delta0: float, gamma0: float,
                        p_click: float = 1.0, eta: float = 1.0) -> SaturationResult:
    """Two-level saturation under a ZPL drive.

    n_zpl = (4 D0^2 + g0^2) / (2 W^2) and <s^+s> = 1/2 / (1 + n_zpl).
    """
    if not gamma0 > 0:
        raise ValueError("gamma0 must be > 0")
    if omega_zpl_rabi == 0:
        return SaturationResult(n_zpl=np.inf, population=0.0, rate=0.0)
    n_zpl = (4 * delta0 ** 2 + gamma0 ** 2) / (2 * omega_zpl_rabi ** 2)
    pop = 0.5 / (1 + n_zpl)
    return SaturationResult(n_zpl=n_zpl, population=pop, rate=p_click * gamma0 * eta ** 2 * pop)


def incoherent_pump_rate(g_as: float, delta0: float, gamma_v: float) -> float:
    """Electronic pump rate from adiabatically eliminating a lossy vibration."""
    if not gamma_v > 0:
        raise ValueError("gamma_v must be > 0")
    return g_as ** 2 / gamma_v * gamma_v ** 2 / (4 * delta0 ** 2 + gamma_v ** 2)


def incoherent_population(rate: float, gamma0: float) -> float:
    if rate + gamma0 == 0:
        return 0.0
    return rate / (rate + gamma0)


@dataclass(frozen=True)
class StokesFigures:
    """Stokes cooperativity and saturation number (n_s is inf when g_S = 0)."""

    cooperativity: float
    n_s: float

    def __post_init__(self):
        if self.cooperativity < 0:
            raise ValueError("cooperativity must be >= 0")
        if not self.n_s > 0:
            raise ValueError("saturation number must be > 0")

    @property
    def saturation_infinite(self) -> bool:
        return np.isinf(self.n_s)


def stokes_figures(g_s: float, delta0: float, gamma0: float, gamma_v: float) -> StokesFigures:
    """C_S = g_S^2 / (gamma_v gamma0), n_S = (4 D0^2 + gamma0^2) / (2 g_S^2)."""
    if not (gamma0 > 0 and gamma_v > 0):
        raise ValueError("gamma0 and gamma_v must be > 0")
    c = g_s ** 2 / (gamma_v * gamma0)
    n_s = np.inf if g_s == 0 else (4 * delta0 ** 2 + gamma0 ** 2) / (2 * g_s ** 2)
    return StokesFigures(cooperativity=c, n_s=n_s)


def transducer_susceptibility(fig: StokesFigures) -> float:
    """chi = 2 n_S C_S^2 / (1 + C_S)^2, valid for a resonant THz drive (Delta_v = 0)."""
    c = fig.cooperativity
    if c == 0:
        return 0.0
    return 2 * fig.n_s * c ** 2 / (1 + c) ** 2


def transduction_rate(chi: float, omega_thz_rabi: float, gamma0: float) -> float:
    """Emission rate chi * W_THz^2 / gamma0 (all nu, GHz)."""
    if not gamma0 > 0:
        raise ValueError("gamma0 must be > 0")
    return chi * omega_thz_rabi ** 2 / gamma0


def chi_map(g_over_gamma0, gv_over_gamma0, delta0: float = 0.0, gamma0: float = 1.0):
    """chi on a grid of g_S/gamma0 (columns) and gamma_v/gamma0 (rows).

    Returns ``(chi, cooperativity)`` arrays of shape (len(gv), len(g)).
    """
    g = np.asarray(g_over_gamma0, dtype=float)[None, :] * gamma0
    gv = np.asarray(gv_over_gamma0, dtype=float)[:, None] * gamma0
    c = g ** 2 / (gv * gamma0)
    n_s = (4 * delta0 ** 2 + gamma0 ** 2) / (2 * g ** 2)
    chi = 2 * n_s * c ** 2 / (1 + c) ** 2
    return chi, np.broadcast_to(c, chi.shape).copy()


@dataclass(frozen=True)
class MeanFieldState:
    """Mean-field steady state.

    ``b`` is <b>; the Stokes-shifted amplitude that enters the saturation
    is ``b_ss = b + b_zpl``.  ``roots`` lists every physical |b_ss|^2 of the
    cubic, ascending; the returned branch is ``roots[branch]``.
    """

    b: complex
    sigma: complex
    s_z: float
    b_zpl: complex
    b_in: complex
    b_ss: complex
    population: float
    roots: tuple[float, ...]
    branch: int = 0

    def __post_init__(self):
        if not -0.5 - 1e-12 <= self.s_z <= 0.5 + 1e-12:
            raise ValueError(f"s_z out of range: {self.s_z}")

    @property
    def bistable(self) -> bool:
        return len(self.roots) > 1


def _meanfield_coefficients(p: ModelParams):
    fig = stokes_figures(p.g_s, p.delta0, p.gamma0, p.gamma_v)
    a = 1 + 2j * p.delta_v / p.gamma_v
    bcoef = fig.cooperativity / (1 + 2j * p.delta0 / p.gamma0)
    b_zpl = p.omega_zpl_rabi / p.g_s
    b_in = -1j * p.omega_thz_rabi / p.gamma_v + a * b_zpl
    return fig, a, bcoef, b_zpl, b_in


def _cubic_roots(a: complex, bcoef: complex, n_s: float, b_in: complex) -> list[float]:
    # with y = x / n_S and x = |b_ss|^2:
    #   x |a (1 + y) + B|^2 = |b_in|^2 (1 + y)^2
    u = a / n_s  # coefficient of x inside a(1+y)
    v = a + bcoef
    # |u x + v|^2 = |u|^2 x^2 + 2 Re(u conj v) x + |v|^2
    c2, c1, c0 = abs(u) ** 2, 2 * (u * np.conj(v)).real, abs(v) ** 2
    k = abs(b_in) ** 2
    poly = [c2, c1 - k / n_s ** 2, c0 - 2 * k / n_s, -k]
    roots = np.roots(poly)
    real = sorted(float(r.real) for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r)) and r.real >= 0)
    # merge numerically coincident roots
    out: list[float] = []
    for r in real:
        if not out or abs(r - out[-1]) > 1e-9 * max(1.0, r):
            out.append(r)
    return out


def meanfield_steady_state(p: ModelParams, branch: int | str = "low", tol: float = 1e-12,
                           max_iter: int = 200) -> MeanFieldState:
    """Algebraic mean-field steady state of the Stokes + ZPL + THz problem.

    The fixed-point equation for b_ss is cubic in x = |b_ss|^2.  All
    nonnegative real roots are found; ``branch="low"`` (default) picks the
    smallest, ``"high"`` the largest, an int indexes the ascending list.
    The chosen root is polished by Newton iteration on the cubic and the
    complex amplitude is recovered from the linear relation at fixed x.
    """
    if p.g_s == 0:
        if p.omega_zpl_rabi != 0:
            raise ValueError("mean-field ZPL drive needs g_s > 0 (b_zpl = W_zpl / g_S)")
        # decoupled: driven damped oscillator, no electronic excitation
        b = -1j * p.omega_thz_rabi / p.gamma_v / (1 + 2j * p.delta_v / p.gamma_v)
        return MeanFieldState(b=b, sigma=0j, s_z=-0.5, b_zpl=0j, b_in=b, b_ss=b,
                              population=0.0, roots=(abs(b) ** 2,), branch=0)
    fig, a, bcoef, b_zpl, b_in = _meanfield_coefficients(p)
    n_s = fig.n_s
    if b_in == 0:
        roots = [0.0]
    else:
        roots = _cubic_roots(a, bcoef, n_s, b_in)
    if not roots:
        raise ConvergenceError("mean-field cubic has no nonnegative real root")
    if branch == "low":
        idx = 0
    elif branch == "high":
        idx = len(roots) - 1
    else:
        idx = int(branch)
    x = roots[idx]

    def resid(x):
        y = x / n_s
        return x * abs(a * (1 + y) + bcoef) ** 2 - abs(b_in) ** 2 * (1 + y) ** 2

    for _ in range(max_iter):
        h = 1e-7 * max(x, 1e-12)
        f = resid(x)
        df = (resid(x + h) - resid(x - h)) / (2 * h) if x > h else (resid(x + h) - f) / h
        if df == 0:
            break
        step = f / df
        x = max(0.0, x - step)
        if abs(step) <= tol * max(x, 1e-30):
            break
    y = x / n_s
    b_ss = b_in / (a + bcoef / (1 + y))
    check = abs((a + bcoef / (1 + y)) * b_ss - b_in)
    if abs(abs(b_ss) ** 2 - x) > 1e-6 * max(1.0, x) or check > 1e-9 * max(1.0, abs(b_in)):
        raise ConvergenceError("mean-field fixed point did not close", residual=abs(abs(b_ss) ** 2 - x))
    y = abs(b_ss) ** 2 / n_s
    pop = 0.5 * y / (1 + y)
    # sigma from the steady state of the sigma equation
    sigma = p.g_s * (pop - 0.5) * b_ss / (p.delta0 - 0.5j * p.gamma0)
    return MeanFieldState(
        b=b_ss - b_zpl, sigma=complex(sigma), s_z=pop - 0.5, b_zpl=complex(b_zpl),
        b_in=complex(b_in), b_ss=complex(b_ss), population=float(pop),
        roots=tuple(roots), branch=idx,
    )


def meanfield_dynamics(p: ModelParams, t_grid, b0: complex = 0j, sigma0: complex = 0j,
                       s_z0: float = -0.5, rtol: float = 1e-8, atol: float = 1e-10):
    """Integrate the mean-field equations of motion (time in ns).

    Returns ``(t, b, sigma, s_z)`` arrays.  Rates are converted to angular
    units internally.
    """
    w = 2 * np.pi
    dv, d0 = w * p.delta_v, w * p.delta0
    gv, g0 = w * p.gamma_v, w * p.gamma0
    gs, wthz = w * p.g_s, w * p.omega_thz_rabi
    b_zpl = p.omega_zpl_rabi / p.g_s if p.g_s else 0.0

    def rhs(t, y):
        b = y[0] + 1j * y[1]
        s = y[2] + 1j * y[3]
        sz = y[4]
        db = -1j * ((dv - 0.5j * gv) * b + gs / 2 * s + wthz / 2)
        ds = -1j * ((d0 - 0.5j * g0) * s - gs * sz * (b + b_zpl))
        dsz = (1j * gs / 2 * (s * np.conj(b + b_zpl) - np.conj(s) * (b + b_zpl))).real - g0 / 2 - g0 * sz
        return [db.real, db.imag, ds.real, ds.imag, dsz]

    t_grid = np.asarray(t_grid, dtype=float)
    y0 = [b0.real, b0.imag, sigma0.real, sigma0.imag, s_z0]
    sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), y0, t_eval=t_grid, method="LSODA",
                    rtol=rtol, atol=atol)
    if sol.status != 0:
        raise ConvergenceError(f"mean-field integration failed: {sol.message}")
    y = sol.y
    return sol.t, y[0] + 1j * y[1], y[2] + 1j * y[3], y[4]
