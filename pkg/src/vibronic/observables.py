"""Physical read-outs: filtered photon numbers, Wigner functions, spectra.

Frequencies in this module follow the model convention: inputs are nu in
GHz and angular quantities are 2pi * nu in rad/ns.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid

from . import fock
from .errors import DimensionError

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
BRANCHES = ("zpl", "stokes", "anti_stokes")

__all__ = [
    "photon_number_operator",
    "fluorescence_rate",
    "FluorescenceRate",
    "FilterWindow",
    "WignerGrid",
    "wigner",
    "reduce_vibrational",
    "reduce_electronic",
    "SpectrumLine",
    "SpectrumMode",
    "Spectrum",
    "analytic_spectrum",
    "lorentzian",
    "franck_condon_extract",
    "write_wigner_csv",
    "write_wigner_svg",
    "write_spectrum_csv",
]


def photon_number_operator(spec: fock.HilbertSpec, eta: float, branch: str) -> sp.csr_matrix:
    """Filtered photon-number operator of one emission branch.

    zpl: s^+s;  stokes: eta^2 s^+s (1 + b^+b);  anti_stokes: eta^2 s^+s b^+b.
    """
    ne = fock.excited_projector(spec)
    if branch == "zpl":
        return ne
    nb = fock.vib_number(spec)
    if branch == "stokes":
        return fock._canon(eta ** 2 * (ne + ne @ nb))
    if branch == "anti_stokes":
        return fock._canon(eta ** 2 * (ne @ nb))
    raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")


@dataclass(frozen=True)
class FilterWindow:
    """Spectral window selecting one branch; center and bandwidth in GHz (nu)."""

    branch: str
    center: float
    bandwidth: float

    def __post_init__(self):
        if self.branch not in BRANCHES:
            raise ValueError(f"branch must be one of {BRANCHES}, got {self.branch!r}")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be > 0")

    def operator(self, spec: fock.HilbertSpec, eta: float) -> sp.csr_matrix:
        return photon_number_operator(spec, eta, self.branch)


@dataclass(frozen=True)
class FluorescenceRate:
    per_ns: float  # detected counts per ns, p * (2pi gamma0) * <N>
    kcps: float  # per_ns / 2pi in kilo-counts per second, the plotted convention


def fluorescence_rate(rho, op, gamma0: float, p_click: float) -> FluorescenceRate:
    """Detected rate ``p_click * (2pi gamma0) * <N>`` for ``gamma0`` in GHz (nu).

    ``per_ns`` is that count rate in 1/ns.  ``kcps`` reports the rate
    divided by 2pi in kilo-counts per second, the unit in which fluorescence
    curves are conventionally plotted (so a saturated ZPL with p = 0.05 and
    gamma0 = 0.04 GHz reads 1000 kcps).
    """
    if not 0.0 <= p_click <= 1.0:
        raise ValueError(f"p_click must lie in [0, 1], got {p_click!r}")
    n = fock.expect(op, rho).real
    per_ns = p_click * TWO_PI * gamma0 * n
    return FluorescenceRate(per_ns=per_ns, kcps=per_ns / TWO_PI * 1e6)


def reduce_vibrational(rho: np.ndarray) -> np.ndarray:
    """Partial trace over the electronic factor."""
    rho = np.asarray(rho)
    d = rho.shape[0]
    if d % 2 or rho.shape != (d, d):
        raise DimensionError(f"expected a square matrix of even size, got {rho.shape}")
    n = d // 2
    return rho[:n, :n] + rho[n:, n:]


def reduce_electronic(rho: np.ndarray) -> np.ndarray:
    """Partial trace over the vibrational factor (2x2 result)."""
    rho = np.asarray(rho)
    d = rho.shape[0]
    if d % 2 or rho.shape != (d, d):
        raise DimensionError(f"expected a square matrix of even size, got {rho.shape}")
    n = d // 2
    return np.trace(rho.reshape(2, n, 2, n), axis1=1, axis2=3)


@dataclass
class WignerGrid:
    """Wigner function sampled on a (q, p) grid; ``values[i, j]`` is at (q[j], p[i]).

    Convention: W(alpha) = (2/pi) Tr[rho D(alpha) P D(-alpha)] with
    alpha = (q + i p)/sqrt(2), so |W| <= 2/pi and the phase-space measure
    that integrates W to Tr rho is d^2alpha = dq dp / 2.
    """

    q: np.ndarray
    p: np.ndarray
    values: np.ndarray
    leak_warning: bool = False
    convention: str = "displaced-parity, alpha=(q+ip)/sqrt2, peak 2/pi"

    def integral(self) -> float:
        """Integral of W over d^2alpha = dq dp / 2 (equals Tr rho on a wide grid)."""
        return 0.5 * float(trapezoid(trapezoid(self.values, self.q, axis=1), self.p))

    def local_maxima(self, rel_height: float = 0.1) -> list[tuple[float, float, float]]:
        """Interior 8-neighbour maxima above ``rel_height`` of the global max, as (q, p, W)."""
        w = self.values
        top = w.max()
        out = []
        for i in range(1, w.shape[0] - 1):
            for j in range(1, w.shape[1] - 1):
                patch = w[i - 1:i + 2, j - 1:j + 2]
                if w[i, j] >= patch.max() and w[i, j] > rel_height * top:
                    out.append((float(self.q[j]), float(self.p[i]), float(w[i, j])))
        return out

    def point_reflection_residual(self) -> float:
        """max |W(q,p) - W(-q,-p)| / max |W|; meaningful on grids symmetric about 0."""
        return float(np.abs(self.values - self.values[::-1, ::-1]).max() / np.abs(self.values).max())


def _wigner_laguerre(rho: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    # Fock-basis expansion W = (2/pi) sum_mn rho_mn W_mn(alpha), with the
    # W_mn built by the stable three-term recursion in m and n
    m_dim = rho.shape[0]
    w_list = [np.zeros_like(alpha) for _ in range(m_dim)]
    w_list[0] = np.exp(-2.0 * np.abs(alpha) ** 2)
    w = np.real(rho[0, 0]) * np.real(w_list[0])
    for n in range(1, m_dim):
        w_list[n] = 2.0 * alpha * w_list[n - 1] / np.sqrt(n)
        w = w + 2.0 * np.real(rho[0, n] * w_list[n])
    for m in range(1, m_dim):
        temp = w_list[m].copy()
        w_list[m] = (2.0 * np.conj(alpha) * temp - np.sqrt(m) * w_list[m - 1]) / np.sqrt(m)
        w = w + np.real(rho[m, m] * w_list[m])
        for n in range(m + 1, m_dim):
            temp2 = (2.0 * alpha * w_list[n - 1] - np.sqrt(m) * temp) / np.sqrt(n)
            temp = w_list[n].copy()
            w_list[n] = temp2
            w = w + 2.0 * np.real(rho[m, n] * w_list[n])
    return 2.0 / np.pi * w


def wigner(rho_v: np.ndarray, q_axis: Sequence[float], p_axis: Sequence[float],
           leak_threshold: float = 1e-3) -> WignerGrid:
    """Wigner function of a single-mode density matrix on a (q, p) grid.

    ``rho_v`` must be the vibrational reduced state (see
    :func:`reduce_vibrational`).  ``leak_warning`` is set when any boundary
    cell exceeds ``leak_threshold`` times the largest |W|, i.e. the grid
    probably clips the state.
    """
    rho_v = np.asarray(rho_v, dtype=np.complex128)
    if rho_v.ndim != 2 or rho_v.shape[0] != rho_v.shape[1]:
        raise DimensionError(f"expected a square density matrix, got {rho_v.shape}")
    q = np.asarray(q_axis, dtype=float)
    p = np.asarray(p_axis, dtype=float)
    qq, pp = np.meshgrid(q, p)
    alpha = (qq + 1j * pp) / np.sqrt(2.0)
    w = _wigner_laguerre(rho_v, alpha)
    scale = np.abs(w).max()
    edge = np.concatenate([w[0], w[-1], w[:, 0], w[:, -1]])
    leak = bool(scale > 0 and np.abs(edge).max() > leak_threshold * scale)
    if leak:
        log.warning("Wigner grid boundary carries %.2g of the peak; widen the grid",
                    np.abs(edge).max() / scale)
    return WignerGrid(q=q, p=p, values=w, leak_warning=leak)


@dataclass(frozen=True)
class SpectrumLine:
    """Lorentzian line; center offset from w0 and FWHM in GHz (nu)."""

    center: float
    fwhm: float
    weight: float
    label: str = ""

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError("fwhm must be > 0")
        if self.weight < 0:
            raise ValueError("weight must be >= 0")


@dataclass(frozen=True)
class SpectrumMode:
    """One vibrational mode: Franck-Condon eta, frequency, linewidth (GHz) and occupation."""

    eta: float
    omega: float
    gamma: float
    n: float = 0.0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("mode occupation must be >= 0")
        if not self.gamma > 0 or not self.omega > 0:
            raise ValueError("mode frequency and linewidth must be > 0")


@dataclass
class Spectrum:
    lines: list[SpectrumLine]
    freq: np.ndarray | None = None
    intensity: np.ndarray | None = None

    def sample(self, freq) -> np.ndarray:
        freq = np.asarray(freq, dtype=float)
        out = np.zeros_like(freq)
        for ln in self.lines:
            out += ln.weight * lorentzian(freq - ln.center, ln.fwhm)
        return out


def lorentzian(x, fwhm: float):
    """Unit-area Lorentzian of full width ``fwhm``."""
    hw = fwhm / 2.0
    return hw / np.pi / (np.asarray(x) ** 2 + hw ** 2)


def analytic_spectrum(gamma0: float, modes: Sequence[SpectrumMode], freq=None) -> Spectrum:
    """Factorized emission spectrum: ZPL plus a Stokes/anti-Stokes pair per mode.

    Centers are offsets from w0 (anti-Stokes at +omega_k, Stokes at
    -omega_k).  The ZPL has FWHM gamma0 and weight 1; sidebands have FWHM
    gamma_k + gamma0 and weights eta_k^2 n_k (anti-Stokes) and
    eta_k^2 (1 + n_k) (Stokes).
    """
    if not gamma0 > 0:
        raise ValueError("gamma0 must be > 0")
    lines = [SpectrumLine(0.0, gamma0, 1.0, "zpl")]
    for k, m in enumerate(modes):
        lines.append(SpectrumLine(+m.omega, m.gamma + gamma0, m.eta ** 2 * m.n, f"anti_stokes_{k}"))
        lines.append(SpectrumLine(-m.omega, m.gamma + gamma0, m.eta ** 2 * (1 + m.n), f"stokes_{k}"))
    spec = Spectrum(lines=lines)
    if freq is not None:
        spec.freq = np.asarray(freq, dtype=float)
        spec.intensity = spec.sample(spec.freq)
    return spec


def franck_condon_extract(freq, intensity, zpl_window: tuple[float, float],
                          stokes_window: tuple[float, float]) -> float:
    """Ratio of the integrated Stokes and ZPL areas, an estimate of eta^2.

    Windows are closed (lo, hi) intervals on the frequency axis.
    """
    freq = np.asarray(freq, dtype=float)
    intensity = np.asarray(intensity, dtype=float)
    (a0, a1), (b0, b1) = sorted(zpl_window), sorted(stokes_window)
    if a0 >= a1 or b0 >= b1:
        raise ValueError("windows must have positive width")
    if a0 < b1 and b0 < a1:
        raise ValueError(f"windows {zpl_window} and {stokes_window} overlap")

    def area(lo, hi):
        m = (freq >= lo) & (freq <= hi)
        if m.sum() < 2:
            raise ValueError(f"window [{lo}, {hi}] contains fewer than two samples")
        return float(trapezoid(intensity[m], freq[m]))

    zpl = area(a0, a1)
    if zpl <= 0:
        raise ValueError("ZPL window has zero area")
    return area(b0, b1) / zpl


def write_wigner_csv(grid: WignerGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "p", "W"])
        for i, p in enumerate(grid.p):
            for j, q in enumerate(grid.q):
                w.writerow([f"{q:.6g}", f"{p:.6g}", f"{grid.values[i, j]:.10g}"])


def _diverging(v: float) -> str:
    # v in [-1, 1]: blue -> white -> red, zero pinned to white
    v = max(-1.0, min(1.0, v))
    if v >= 0:
        r, g, b = 255, int(255 * (1 - v)), int(255 * (1 - v))
    else:
        r, g, b = int(255 * (1 + v)), int(255 * (1 + v)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def write_wigner_svg(grid: WignerGrid, path, cell: int = 6) -> None:
    """Minimal heatmap: one rect per grid cell, p increasing upwards."""
    ny, nx = grid.values.shape
    scale = float(np.abs(grid.values).max()) or 1.0
    width, height = nx * cell, ny * cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + 20}" '
        f'viewBox="0 0 {width} {height + 20}">',
        f'<title>Wigner function, |W|max = {scale:.4g}</title>',
    ]
    for i in range(ny):
        y = (ny - 1 - i) * cell
        for j in range(nx):
            color = _diverging(grid.values[i, j] / scale)
            parts.append(f'<rect x="{j * cell}" y="{y}" width="{cell}" height="{cell}" fill="{color}"/>')
    parts.append(
        f'<text x="2" y="{height + 14}" font-size="11" font-family="monospace">'
        f'q [{grid.q[0]:.3g}, {grid.q[-1]:.3g}]  p [{grid.p[0]:.3g}, {grid.p[-1]:.3g}]  '
        f'max|W| {scale:.4g}</text>'
    )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def write_spectrum_csv(freq, intensity, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_offset_ghz", "intensity"])
        for f, s in zip(freq, intensity):
            w.writerow([f"{f:.10g}", f"{s:.10g}"])
