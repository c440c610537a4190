"""Order-of-magnitude feasibility arithmetic for dense-medium schemes.

Evaluates, in SI units throughout: the cooperatively enhanced Raman
Rabi rate of a driven atomic ensemble, the resonant dipole-dipole
dephasing rate between close atoms, and the high/low density regime
classification by the parameter rho / k^3 (atoms per cubic reduced
wavelength).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "VACUUM_PERMITTIVITY",
    "REDUCED_PLANCK",
    "MediumParams",
    "RegimeReport",
    "cooperative_raman_rate",
    "dipole_dipole_rate",
    "nearest_neighbor_distance",
    "regime_classify",
]

#: CODATA values, SI.
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F / m
REDUCED_PLANCK = 1.054571817e-34        # J s


def _require_positive(**values) -> None:
    for name, value in values.items():
        if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
            raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class MediumParams:
    """Atomic-medium figures, all positive, SI units.

    density: atoms per m^3; omega: transition angular frequency (1/s);
    dipole: transition dipole moment (C m); detuning: single-photon
    detuning (1/s); rabi: strong-field Rabi frequency (1/s); gamma:
    radiative linewidth (1/s); wavenumber: photon k (1/m); t2:
    dephasing time (s).
    """

    density: float
    omega: float
    dipole: float
    detuning: float
    rabi: float
    gamma: float
    wavenumber: float
    t2: float

    def __post_init__(self):
        _require_positive(
            density=self.density, omega=self.omega, dipole=self.dipole,
            detuning=self.detuning, rabi=self.rabi, gamma=self.gamma,
            wavenumber=self.wavenumber, t2=self.t2,
        )


def cooperative_raman_rate(params: MediumParams) -> float:
    """Collectively enhanced two-photon Rabi rate.

    sqrt(density * omega / (eps0 * hbar)) * dipole * rabi / detuning;
    the square root carries the sqrt(N) cooperative enhancement folded
    into the density.
    """
    envelope = math.sqrt(
        params.density * params.omega / (VACUUM_PERMITTIVITY * REDUCED_PLANCK)
    )
    return envelope * params.dipole * params.rabi / params.detuning


def dipole_dipole_rate(gamma: float, wavenumber: float, distance: float) -> float:
    """Near-field dipole-dipole interaction rate gamma / (k r)^3."""
    _require_positive(gamma=gamma, wavenumber=wavenumber, distance=distance)
    return gamma / (wavenumber * distance) ** 3


def nearest_neighbor_distance(density: float) -> float:
    """Typical interatomic distance density^(-1/3) (no packing factor)."""
    _require_positive(density=density)
    return density ** (-1.0 / 3.0)


@dataclass(frozen=True)
class RegimeReport:
    """Outcome of the density-regime classification."""

    density_parameter: float      # rho / k^3
    regime: str                   # "high-density" | "low-density"
    dipole_rate: float            # gamma * rho / k^3 at nearest-neighbor r
    dephasing_rate: float         # 1 / T2
    dominant_channel: str         # "dipole-dipole" | "dephasing"
    dominant_rate: float
    cooperative_rate: float
    cooperation_wins: bool

    def to_payload(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "regime_report",
            "density_parameter": float(self.density_parameter),
            "regime": self.regime,
            "dipole_rate": float(self.dipole_rate),
            "dephasing_rate": float(self.dephasing_rate),
            "dominant_channel": self.dominant_channel,
            "dominant_rate": float(self.dominant_rate),
            "cooperative_rate": float(self.cooperative_rate),
            "cooperation_wins": bool(self.cooperation_wins),
        }


def regime_classify(density: float, wavenumber: float, gamma: float,
                    t2: float, cooperative_rate: float) -> RegimeReport:
    """Classify the medium and name the dominant decoherence channel.

    High density means density / wavenumber^3 >= 1 (the boundary counts
    as high).  The dipole-dipole rate is evaluated at the
    nearest-neighbor distance, where it reduces to gamma * rho / k^3,
    and competes against 1 / T2; cooperation wins when the cooperative
    rate beats the dominant decoherence rate.
    """
    _require_positive(density=density, wavenumber=wavenumber, gamma=gamma,
                      t2=t2, cooperative_rate=cooperative_rate)
    density_parameter = density / wavenumber ** 3
    regime = "high-density" if density_parameter >= 1.0 else "low-density"
    dipole_rate = dipole_dipole_rate(
        gamma, wavenumber, nearest_neighbor_distance(density)
    )
    dephasing_rate = 1.0 / t2
    if dipole_rate >= dephasing_rate:
        dominant_channel, dominant_rate = "dipole-dipole", dipole_rate
    else:
        dominant_channel, dominant_rate = "dephasing", dephasing_rate
    return RegimeReport(
        density_parameter=density_parameter,
        regime=regime,
        dipole_rate=dipole_rate,
        dephasing_rate=dephasing_rate,
        dominant_channel=dominant_channel,
        dominant_rate=dominant_rate,
        cooperative_rate=cooperative_rate,
        cooperation_wins=cooperative_rate > dominant_rate,
    )
