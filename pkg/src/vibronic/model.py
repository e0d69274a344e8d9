"""Rotating-frame Hamiltonians built from one physical parameter record.

Frequencies in :class:`ModelParams` are entered as nu = omega / 2pi in GHz,
exactly as quoted in experiments ("gamma_v / 2pi = 10 GHz").  Builders
multiply by 2pi, so every returned operator is in rad/ns with hbar = 1 and
time measured in ns.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import fock
from .fock import HilbertSpec

TWO_PI = 2.0 * np.pi

__all__ = [
    "ModelParams",
    "DriveSelection",
    "JumpChannel",
    "build_holstein",
    "build_hamiltonian",
    "dissipators",
    "coupling_from_rabi",
    "two_phonon_coupling_from_rabi",
    "polaron_unitary",
    "truncation_order_check",
    "TruncationReport",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters; every rate/frequency field is nu = omega/2pi in GHz."""

    delta0: float = 0.0
    delta_v: float = 0.0
    eta: float = 0.3
    omega_zpl_rabi: float = 0.0
    g_s: float = 0.0
    g_as: float = 0.0
    g_as2: float = 0.0
    omega_thz_rabi: float = 0.0
    gamma0: float = 0.04
    gamma_v: float = 10.0
    gamma_phi_opt: float = 0.0
    gamma_phi_v: float = 0.0
    n_cutoff: int = 20

    def __post_init__(self):
        for name in ("gamma0", "gamma_v", "gamma_phi_opt", "gamma_phi_v", "eta"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        for f in fields(self):
            if f.name != "n_cutoff" and not np.isfinite(getattr(self, f.name)):
                raise ValueError(f"{f.name} must be finite")
        if int(self.n_cutoff) != self.n_cutoff or self.n_cutoff < 2:
            raise ValueError(f"n_cutoff must be an integer >= 2, got {self.n_cutoff!r}")
        object.__setattr__(self, "n_cutoff", int(self.n_cutoff))

    @property
    def spec(self) -> HilbertSpec:
        return HilbertSpec(self.n_cutoff)

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class DriveSelection:
    """Which drive terms enter the Hamiltonian (the free part is always present)."""

    zpl: bool = False
    stokes: bool = False
    anti_stokes: bool = False
    anti_stokes2: bool = False
    thz: bool = False

    @classmethod
    def jaynes_cummings(cls) -> "DriveSelection":
        return cls(stokes=True)

    @classmethod
    def jc_zpl(cls) -> "DriveSelection":
        return cls(stokes=True, zpl=True)

    @classmethod
    def generalized_rabi(cls, bias: bool = False) -> "DriveSelection":
        return cls(stokes=True, anti_stokes=True, anti_stokes2=bias)

    @classmethod
    def transducer(cls) -> "DriveSelection":
        return cls(stokes=True, thz=True)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DriveSelection":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown drive flags: {sorted(unknown)}")
        return cls(**{k: bool(v) for k, v in data.items()})


@dataclass(frozen=True)
class JumpChannel:
    """Lindblad channel ``sqrt(rate) * operator``; ``rate`` is nu in GHz."""

    operator: sp.csr_matrix
    rate: float
    label: str = ""

    def __post_init__(self):
        if not self.rate >= 0:
            raise ValueError(f"jump rate must be >= 0, got {self.rate!r}")

    @property
    def angular_rate(self) -> float:
        return TWO_PI * self.rate


def build_holstein(spec: HilbertSpec, omega0: float, omega_v: float, eps1: float) -> sp.csr_matrix:
    """Lab-frame Holstein model ``w0 s^+s + wv b^+b + eps1 (b + b^+) s^+s``.

    Arguments are angular frequencies and are used as given.  Only meant
    for checking the polaron transformation; omega0 >> omega_v is assumed
    but not enforced.
    """
    b = fock.annihilation(spec)
    ne = fock.excited_projector(spec)
    nb = fock.vib_number(spec)
    h = omega0 * ne + omega_v * nb + eps1 * ((b + b.conj().T) @ ne)
    return fock._canon(h)


def polaron_unitary(spec: HilbertSpec, eta: float) -> np.ndarray:
    """Dense ``exp[-eta (b - b^dag) s^+s]``, which diagonalizes :func:`build_holstein`.

    With the coupling written as ``+eps1 (b + b^dag) s^+s`` the excited-state
    potential minimum sits at ``-eta``, so this sign (rather than ``+eta``)
    is the one that removes the linear term when applied as ``U H U^dag``.
    """
    b = fock.annihilation(spec).toarray()
    ne = fock.excited_projector(spec).toarray()
    return sla.expm(-eta * (b - b.conj().T) @ ne)


def build_hamiltonian(params: ModelParams, drives: DriveSelection) -> sp.csr_matrix:
    """Rotating-frame Hamiltonian in rad/ns.

    H = D0 s^+s + Dv b^+b
        + (W_zpl/2)(s + s^+)            [zpl]
        + (g_S/2)(s b^+ + s^+ b)        [stokes]
        + (g_AS/2)(s b + s^+ b^+)       [anti_stokes]
        + (g_AS2/2)(s b^2 + s^+ b^+2)   [anti_stokes2]
        + (W_THz/2)(b + b^+)            [thz]

    with all drive phases fixed to zero.
    """
    spec = params.spec
    b = fock.annihilation(spec)
    s = fock.sigma_minus(spec)
    bd = b.conj().T
    sd = s.conj().T
    h = params.delta0 * fock.excited_projector(spec) + params.delta_v * fock.vib_number(spec)
    if drives.zpl:
        h = h + params.omega_zpl_rabi / 2 * (s + sd)
    if drives.stokes:
        h = h + params.g_s / 2 * (s @ bd + sd @ b)
    if drives.anti_stokes:
        h = h + params.g_as / 2 * (s @ b + sd @ bd)
    if drives.anti_stokes2:
        h = h + params.g_as2 / 2 * (s @ b @ b + sd @ bd @ bd)
    if drives.thz:
        h = h + params.omega_thz_rabi / 2 * (b + bd)
    h = fock._canon(TWO_PI * h)
    # exact Hermiticity (the terms above are Hermitian up to summation order)
    return fock._canon((h + h.conj().T) / 2)


def dissipators(params: ModelParams) -> list[JumpChannel]:
    """Electronic decay, vibrational decay and the optional dephasing channels.

    Channels with zero rate are omitted.
    """
    spec = params.spec
    channels = [
        JumpChannel(fock.sigma_minus(spec), params.gamma0, "sigma"),
        JumpChannel(fock.annihilation(spec), params.gamma_v, "b"),
        JumpChannel(fock.excited_projector(spec), params.gamma_phi_opt, "dephasing_opt"),
        JumpChannel(fock.vib_number(spec), params.gamma_phi_v, "dephasing_v"),
    ]
    return [c for c in channels if c.rate > 0]


def coupling_from_rabi(eta: float, omega_rabi: float) -> float:
    """First-order sideband coupling ``g = eta * Omega``."""
    return eta * omega_rabi


def two_phonon_coupling_from_rabi(eta: float, omega_rabi: float) -> float:
    """Two-vibration sideband coupling ``g_AS2 = eta^2 Omega / 2``."""
    return eta ** 2 * omega_rabi / 2


@dataclass(frozen=True)
class TruncationReport:
    eta: float
    block: int
    max_deviation: float


def truncation_order_check(spec: HilbertSpec, eta: float, block: int = 4) -> TruncationReport:
    """Largest elementwise gap between ``D(eta) s`` and ``s + eta (b^+ - b) s``.

    Only matrix elements between vibrational levels below ``block`` (both
    electronic branches) are compared, which keeps the cutoff out of the
    comparison.  The gap is O(eta^2) and documents the first-order
    sideband expansion.
    """
    if not 0 <= eta < 1:
        raise ValueError(f"eta must lie in [0, 1), got {eta!r}")
    block = min(block, spec.n_cutoff)
    s = fock.sigma_minus(spec)
    b = fock.annihilation(spec)
    exact = (fock.displacement(spec, eta) @ s).toarray()
    linear = (s + eta * (b.conj().T - b) @ s).toarray()
    keep = np.concatenate([np.arange(block), spec.n_cutoff + np.arange(block)])
    diff = np.abs(exact - linear)[np.ix_(keep, keep)]
    return TruncationReport(eta=eta, block=block, max_deviation=float(diff.max()))
