"""Experimental design calculator: intensities, fields, dipoles, THz drives.

SI constants come from scipy.constants (CODATA).  Public units:
intensity W/cm^2, lengths nm (dipoles) or um (metamaterial geometry),
capacitance aF, frequencies nu = omega/2pi in GHz unless the name says THz.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import constants as const

from .semiclassical import stokes_figures, transducer_susceptibility

HBAR = const.hbar
E_CHARGE = const.e
ALPHA_FS = const.fine_structure
Z_VAC = 1.0 / (const.c * const.epsilon_0)  # ~376.73 Ohm

__all__ = [
    "DriveDesign",
    "MetamaterialDesign",
    "AdiabaticLC",
    "rabi_from_intensity",
    "rabi_from_field",
    "field_from_intensity",
    "intensity_from_field",
    "saturation_scaled_rabi",
    "vibrational_dipole_from_cross_section",
    "capacitive_gain",
    "eliminate_lc",
    "transducer_count_rate",
    "ScenarioEstimate",
    "scenario_estimate",
    "SCENARIOS",
    "Z_VAC",
]


def _check_nonneg(**values):
    for k, v in values.items():
        if not np.isfinite(v) or v < 0:
            raise ValueError(f"{k} must be finite and >= 0, got {v!r}")


def rabi_from_intensity(intensity: float, dipole_length: float) -> float:
    """Rabi frequency nu = W/2pi in GHz for I in W/cm^2 and dipole length xi in nm.

    W = xi sqrt(8 pi alpha I / hbar).
    """
    _check_nonneg(intensity=intensity, dipole_length=dipole_length)
    i_si = intensity * 1e4
    omega = dipole_length * 1e-9 * np.sqrt(8 * np.pi * ALPHA_FS * i_si / HBAR)
    return omega / (2 * np.pi) / 1e9


def saturation_scaled_rabi(intensity: float, rabi_sat: float, intensity_sat: float) -> float:
    """Scaling form W = W_s sqrt(I / I_s)."""
    _check_nonneg(intensity=intensity, rabi_sat=rabi_sat)
    if not intensity_sat > 0:
        raise ValueError("intensity_sat must be > 0")
    return rabi_sat * np.sqrt(intensity / intensity_sat)


def field_from_intensity(intensity: float) -> float:
    """RMS field E in V/m from I = (c eps0 / 2) E^2, I in W/cm^2."""
    _check_nonneg(intensity=intensity)
    return float(np.sqrt(2 * intensity * 1e4 / (const.c * const.epsilon_0)))


def intensity_from_field(e_field: float) -> float:
    """Inverse of :func:`field_from_intensity`, returning W/cm^2."""
    _check_nonneg(e_field=e_field)
    return const.c * const.epsilon_0 / 2 * e_field ** 2 / 1e4


def rabi_from_field(e_field: float, dipole_length: float) -> float:
    """nu = xi e E / (2 pi hbar) in GHz, for E in V/m and xi in nm."""
    _check_nonneg(e_field=e_field, dipole_length=dipole_length)
    return dipole_length * 1e-9 * E_CHARGE * e_field / (2 * np.pi * HBAR) / 1e9


def vibrational_dipole_from_cross_section(sigma_abs: float, q_v: float) -> float:
    """xi_v = sqrt(sigma / (4 pi alpha Q_v)); sigma in nm^2, result in nm."""
    _check_nonneg(sigma_abs=sigma_abs)
    if not q_v > 0:
        raise ValueError("q_v must be > 0")
    return float(np.sqrt(sigma_abs / (4 * np.pi * ALPHA_FS * q_v)))


@dataclass(frozen=True)
class DriveDesign:
    """Free-space drive: intensity (W/cm^2), dipole length (nm), wavelength (nm)."""

    intensity: float
    dipole_length: float
    wavelength: float = 0.0

    def __post_init__(self):
        _check_nonneg(intensity=self.intensity, dipole_length=self.dipole_length,
                      wavelength=self.wavelength)

    @property
    def rabi(self) -> float:
        return rabi_from_intensity(self.intensity, self.dipole_length)

    @property
    def field(self) -> float:
        return field_from_intensity(self.intensity)

    @property
    def focused_power(self) -> float:
        """Diffraction-limited power pi lambda^2 I in W."""
        return np.pi * (self.wavelength * 1e-7) ** 2 * self.intensity


@dataclass(frozen=True)
class MetamaterialDesign:
    """LC metamaterial: quality factor, cross-section (um^2), gap (um), C (aF), f_LC (THz).

    Give either ``capacitance`` and ``f_lc`` (impedance derived) or
    ``impedance`` directly; when all three are supplied they must satisfy
    Z = 1 / (C w_LC) to 1e-9 relative.
    """

    q_lc: float
    sigma_lc: float
    gap: float
    capacitance: float | None = None
    f_lc: float | None = None
    impedance: float | None = field(default=None)

    def __post_init__(self):
        _check_nonneg(sigma_lc=self.sigma_lc)
        if not (self.q_lc > 0 and self.gap > 0):
            raise ValueError("q_lc and gap must be > 0")
        derived = None
        if self.capacitance is not None and self.f_lc is not None:
            if not (self.capacitance > 0 and self.f_lc > 0):
                raise ValueError("capacitance and f_lc must be > 0")
            derived = 1.0 / (self.capacitance * 1e-18 * 2 * np.pi * self.f_lc * 1e12)
        if self.impedance is None:
            if derived is None:
                raise ValueError("give impedance, or capacitance together with f_lc")
            object.__setattr__(self, "impedance", derived)
        else:
            if not self.impedance > 0:
                raise ValueError("impedance must be > 0")
            if derived is not None and abs(derived - self.impedance) > 1e-9 * self.impedance:
                raise ValueError(f"impedance {self.impedance} inconsistent with 1/(C w_LC) = {derived}")

    @classmethod
    def from_impedance(cls, q_lc, sigma_lc, gap, impedance, f_lc=None):
        cap = None
        if f_lc is not None:
            cap = 1.0 / (impedance * 2 * np.pi * f_lc * 1e12) * 1e18
        return cls(q_lc=q_lc, sigma_lc=sigma_lc, gap=gap, capacitance=cap, f_lc=f_lc,
                   impedance=impedance if cap is None else None)

    @property
    def gamma_lc_thz(self) -> float | None:
        """LC linewidth f_LC / Q in THz (nu), when f_LC is known."""
        return None if self.f_lc is None else self.f_lc / self.q_lc

    @property
    def gain(self) -> float:
        return capacitive_gain(self)


def capacitive_gain(design: MetamaterialDesign) -> float:
    """G_C = sqrt(2 Q (sigma / d^2) (Z / Z_vac))."""
    return float(np.sqrt(2 * design.q_lc * design.sigma_lc / design.gap ** 2
                         * design.impedance / Z_VAC))


@dataclass(frozen=True)
class AdiabaticLC:
    """Effect of an eliminated LC mode on the vibration (all nu, GHz)."""

    shift: float
    extra_damping: float
    drive: complex

    @property
    def drive_magnitude(self) -> float:
        return abs(self.drive)


def eliminate_lc(g_c: float, omega_lc_drive: float, delta_lc: float, gamma_lc: float) -> AdiabaticLC:
    """Frequency shift, added damping and effective drive of the vibration.

    Valid for gamma_LC much larger than every other rate in the problem.
    The returned drive has magnitude 2 g_C W_LC / gamma_LC at resonance.
    """
    if not gamma_lc > 0:
        raise ValueError("gamma_lc must be > 0")
    den = delta_lc ** 2 + gamma_lc ** 2 / 4
    shift = -g_c ** 2 * delta_lc / den
    damping = 4 * g_c ** 2 / gamma_lc * (gamma_lc ** 2 / 4) / den
    # W_eff = 2 g_C W_LC / (2 (D - i G/2)) up to sign; its magnitude at
    # resonance is 2 g_C W_LC / gamma_LC
    drive = -g_c * omega_lc_drive / (delta_lc - 0.5j * gamma_lc)
    return AdiabaticLC(shift=shift, extra_damping=damping, drive=complex(drive))


def transducer_count_rate(omega_thz_rabi: float, chi: float, gamma0: float,
                          p_click: float = 0.05) -> float:
    """Detected transduced rate p chi W_THz^2 / gamma0 in kcps (GHz inputs, nu)."""
    if not 0 <= p_click <= 1:
        raise ValueError("p_click must lie in [0, 1]")
    if not gamma0 > 0:
        raise ValueError("gamma0 must be > 0")
    return p_click * chi * omega_thz_rabi ** 2 / gamma0 * 1e6


@dataclass(frozen=True)
class ScenarioEstimate:
    name: str
    e_field: float  # V/m
    rabi: float  # GHz
    gain: float
    chi: float
    rate_kcps: float
    notes: str = ""


# end-to-end inputs of the three THz coupling scenarios
SCENARIOS = {
    "free_space": dict(intensity=100.0, dipole_length=1e-3),
    "patch": dict(e_field=1e6, dipole_length=1e-3),
    "metamaterial": dict(intensity=100.0, dipole_length=1e-3,
                         design=dict(q_lc=10.0, sigma_lc=430.0, gap=1.0, impedance=375.0)),
}


def scenario_estimate(name: str, chi: float | None = None, gamma0: float = 0.04,
                      gamma_v: float = 10.0, p_click: float = 0.05, **overrides) -> ScenarioEstimate:
    """Chain field -> Rabi -> (gain) -> count rate for a named scenario.

    ``chi`` defaults to the optimum gamma0 / (4 gamma_v) reached at C_S = 1.
    """
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    cfg = {**SCENARIOS[name], **overrides}
    if chi is None:
        g_s = np.sqrt(gamma_v * gamma0)
        chi = transducer_susceptibility(stokes_figures(g_s, 0.0, gamma0, gamma_v))
    notes = ""
    gain = 1.0
    if "e_field" in cfg:
        e_field = cfg["e_field"]
    else:
        e_field = field_from_intensity(cfg["intensity"])
        notes = f"E from I = (c eps0/2) E^2 at {cfg['intensity']:g} W/cm^2"
    rabi = rabi_from_field(e_field, cfg["dipole_length"])
    if "design" in cfg:
        design = cfg["design"]
        if not isinstance(design, MetamaterialDesign):
            design = MetamaterialDesign(**design)
        gain = capacitive_gain(design)
        rabi *= gain
    rate = transducer_count_rate(rabi, chi, gamma0, p_click)
    return ScenarioEstimate(name=name, e_field=e_field, rabi=rabi, gain=gain, chi=chi,
                            rate_kcps=rate, notes=notes)
