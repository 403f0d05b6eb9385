"""Simplified detector forward model producing expected-count template spectra.

Replaces a full transport code with: isotropic point source, inverse-square
geometry, exponential shielding attenuation at each line energy, and a
detector response of Gaussian photopeak plus flat Compton continuum.
Templates are expected values; Poisson sampling to finite dwells lives in
:mod:`gammasort.ensemble`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import erf

from . import nucleardata
from .spectra import (
    EnergyCalibration,
    Spectrum,
    SpectrumKind,
    default_calibration,
)

ELECTRON_REST_KEV = 511.0

# 24-hour reference dwell for template synthesis.
TEMPLATE_DWELL_S = 86400.0

# 2" x 4" front face of the reference NaI detector, in cm^2.
DEFAULT_FACE_AREA_CM2 = 5.08 * 10.16
DEFAULT_INTRINSIC_EFFICIENCY = 0.5
DEFAULT_RESOLUTION_FWHM_FRAC_662 = 0.075
DEFAULT_COMPTON_FRACTION = 0.4

# Sized so a bare Cesium source at 10 m yields ~200 detected counts/s.
DEFAULT_ACTIVITY_BQ = 1.15e8

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
GAUSSIAN_TRUNCATION_SIGMA = 6.0

# Ambient background shape: exponential low-energy slope plus a flat shelf
# that both cut off at the Tl-208 line energy.
BACKGROUND_SLOPE_KEV = 150.0
BACKGROUND_MAX_KEV = 2614.0
BACKGROUND_FLAT_LEVEL = 0.02
DEFAULT_BACKGROUND_CPS = 300.0

DEFAULT_SHIELD_THICKNESS_CM = {
    "Concrete": 5.0,
    "Steel": 1.0,
    "DepletedUranium": 0.5,
}

# Depleted uranium shielding is itself a gamma emitter (Pa-234m daughter
# lines); modeled as a co-located source scaling with shield thickness.
DU_EMISSION_LINES = ((766.4, 0.00294), (1001.0, 0.00835))
DU_EMISSION_BQ_PER_CM = 6.0e8


class ShieldMaterial(Enum):
    BARE = "Bare"
    CONCRETE = "Concrete"
    STEEL = "Steel"
    DEPLETED_URANIUM = "DepletedUranium"


@dataclass(frozen=True)
class Isotope:
    """A named source with its gamma lines as (energy_keV, intensity) pairs."""

    name: str
    lines: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.lines:
            raise ValueError(f"{self.name}: isotope needs at least one line")
        for energy, intensity in self.lines:
            if not energy > 0:
                raise ValueError(f"{self.name}: line energy {energy} must be positive")
            if not 0 < intensity <= 1:
                raise ValueError(f"{self.name}: intensity {intensity} outside (0, 1]")

    @property
    def max_line_energy(self) -> float:
        return max(energy for energy, _ in self.lines)


@dataclass(frozen=True)
class Shielding:
    """Material slab between source and detector.

    The attenuation table holds (energy_keV, mu_per_cm) samples; lookups
    interpolate log-log between rows.  Bare carries no table.
    """

    material: ShieldMaterial
    thickness_cm: float
    energies_kev: np.ndarray | None = None
    mu_per_cm: np.ndarray | None = None

    def __post_init__(self):
        if self.material is ShieldMaterial.BARE:
            if self.thickness_cm != 0:
                raise ValueError("Bare shielding must have zero thickness")
            return
        if self.thickness_cm < 0:
            raise ValueError(f"thickness {self.thickness_cm} cm must be non-negative")
        if self.energies_kev is None or self.mu_per_cm is None:
            raise ValueError(f"{self.material.value}: attenuation table required")
        energies = np.array(self.energies_kev, dtype=np.float64, copy=True)
        mu = np.array(self.mu_per_cm, dtype=np.float64, copy=True)
        if energies.shape != mu.shape or energies.ndim != 1 or energies.size < 2:
            raise ValueError("attenuation table needs matching 1-D energy/mu arrays")
        if np.any(mu <= 0):
            raise ValueError("attenuation coefficients must be positive")
        if np.any(np.diff(energies) <= 0):
            raise ValueError("attenuation energies must be strictly increasing")
        energies.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "energies_kev", energies)
        object.__setattr__(self, "mu_per_cm", mu)


@dataclass(frozen=True)
class SourceConfig:
    """One cell of the source/distance/shielding variation grid."""

    isotope: Isotope
    activity_bq: float
    distance_m: float
    shielding: Shielding
    include_background: bool = False

    def __post_init__(self):
        if not self.activity_bq > 0:
            raise ValueError(f"activity {self.activity_bq} must be positive")
        if not self.distance_m > 0:
            raise ValueError(f"distance {self.distance_m} must be positive")


@dataclass(frozen=True)
class DetectorModel:
    """Abstract NaI-like detector: geometry, efficiency, resolution, continuum split."""

    calibration: EnergyCalibration
    face_area_cm2: float = DEFAULT_FACE_AREA_CM2
    intrinsic_efficiency: float = DEFAULT_INTRINSIC_EFFICIENCY
    resolution_fwhm_frac_662: float = DEFAULT_RESOLUTION_FWHM_FRAC_662
    compton_fraction: float = DEFAULT_COMPTON_FRACTION

    def __post_init__(self):
        if not self.face_area_cm2 > 0:
            raise ValueError("face area must be positive")
        for name in ("intrinsic_efficiency", "resolution_fwhm_frac_662", "compton_fraction"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name}={value} outside (0, 1]")

    def fwhm_kev(self, energy_kev: float) -> float:
        """Resolution FWHM at ``energy_kev``, sqrt-energy scaling from 662 keV."""
        return self.resolution_fwhm_frac_662 * 662.0 * math.sqrt(energy_kev / 662.0)


def default_detector(n_channels: int = 1024) -> DetectorModel:
    cal = default_calibration()
    if n_channels != cal.n_channels:
        cal = EnergyCalibration(cal.e_min, cal.e_max, n_channels)
    return DetectorModel(calibration=cal)


def bare_shielding() -> Shielding:
    return Shielding(ShieldMaterial.BARE, 0.0)


_MATERIAL_SLUGS = {
    ShieldMaterial.CONCRETE: "concrete",
    ShieldMaterial.STEEL: "steel",
    ShieldMaterial.DEPLETED_URANIUM: "depleted_uranium",
}


def default_shielding(material: ShieldMaterial | str, thickness_cm: float | None = None) -> Shielding:
    """Shielding with the bundled attenuation table and default thickness."""
    if isinstance(material, str):
        material = ShieldMaterial(material)
    if material is ShieldMaterial.BARE:
        return bare_shielding()
    if thickness_cm is None:
        thickness_cm = DEFAULT_SHIELD_THICKNESS_CM[material.value]
    energies, mu = nucleardata.load_attenuation_table(_MATERIAL_SLUGS[material])
    return Shielding(material, thickness_cm, energies, mu)


def isotope_by_name(name: str) -> Isotope:
    """Isotope built from the bundled line table."""
    lines = nucleardata.load_nuclide_lines()
    if name not in lines:
        raise ValueError(f"unknown isotope {name!r}; bundled: {sorted(lines)}")
    return Isotope(name, lines[name])


def attenuation_factor(shielding: Shielding, energy_kev: float) -> float:
    """Transmitted fraction exp(-mu(E) * thickness), mu log-log interpolated."""
    if shielding.material is ShieldMaterial.BARE or shielding.thickness_cm == 0:
        return 1.0
    energies = shielding.energies_kev
    if not energies[0] <= energy_kev <= energies[-1]:
        raise ValueError(
            f"energy {energy_kev} keV outside attenuation table "
            f"[{energies[0]}, {energies[-1]}]"
        )
    log_mu = np.interp(math.log(energy_kev), np.log(energies), np.log(shielding.mu_per_cm))
    return math.exp(-math.exp(log_mu) * shielding.thickness_cm)


def compton_edge(energy_kev: float) -> float:
    """Maximum single-scatter energy transfer for a photon of ``energy_kev``."""
    if not energy_kev > 0:
        raise ValueError(f"energy {energy_kev} must be positive")
    ratio = 2.0 * energy_kev / ELECTRON_REST_KEV
    return energy_kev * ratio / (1.0 + ratio)


def geometric_fraction(distance_m: float, face_area_cm2: float) -> float:
    """Solid-angle fraction of an isotropic source subtended by the detector face."""
    radius_cm = 100.0 * distance_m
    return face_area_cm2 / (4.0 * math.pi * radius_cm * radius_cm)


def line_response(
    detector: DetectorModel,
    line_energy_kev: float,
    expected_detections: float,
    dwell_s: float = 1.0,
) -> Spectrum:
    """Detector response to one gamma line carrying ``expected_detections`` counts.

    (1 - compton_fraction) of the counts form a Gaussian photopeak at the line
    energy (FWHM scaling as sqrt(E), truncated at +-6 sigma); the rest spread
    uniformly from zero up to the Compton edge.  Total counts are conserved to
    well under 0.1% (only the truncated Gaussian tails are lost).
    """
    cal = detector.calibration
    if not line_energy_kev < cal.e_max:
        raise ValueError(f"line at {line_energy_kev} keV is outside calibration range")
    if expected_detections < 0:
        raise ValueError("expected detections must be non-negative")

    sigma = detector.fwhm_kev(line_energy_kev) * FWHM_TO_SIGMA
    edges = cal.bin_edges()
    z = (edges - line_energy_kev) / (sigma * math.sqrt(2.0))
    peak = 0.5 * np.diff(erf(z))
    centers = cal.bin_centers()
    peak[np.abs(centers - line_energy_kev) > GAUSSIAN_TRUNCATION_SIGMA * sigma] = 0.0

    edge_kev = compton_edge(line_energy_kev)
    overlap = np.clip(np.minimum(edges[1:], edge_kev) - np.maximum(edges[:-1], 0.0), 0.0, None)
    continuum = overlap / edge_kev

    shape = (1.0 - detector.compton_fraction) * peak + detector.compton_fraction * continuum
    return Spectrum(expected_detections * shape, cal, dwell_s, SpectrumKind.EXPECTED_TEMPLATE)


def background_template(
    detector: DetectorModel,
    dwell_s: float,
    rate_cps: float = DEFAULT_BACKGROUND_CPS,
) -> Spectrum:
    """Deterministic ambient-background expectation, scaled to ``rate_cps``."""
    if not dwell_s > 0:
        raise ValueError(f"dwell {dwell_s} must be positive")
    cal = detector.calibration
    centers = cal.bin_centers()
    shape = np.exp(-centers / BACKGROUND_SLOPE_KEV) + BACKGROUND_FLAT_LEVEL
    shape[centers > BACKGROUND_MAX_KEV] = 0.0
    shape /= math.fsum(shape)
    return Spectrum(rate_cps * dwell_s * shape, cal, dwell_s, SpectrumKind.EXPECTED_TEMPLATE)


def build_template(
    config: SourceConfig,
    detector: DetectorModel,
    dwell_s: float,
    background_cps: float = DEFAULT_BACKGROUND_CPS,
) -> Spectrum:
    """Expected-count spectrum for one source configuration at ``dwell_s``.

    Per line: activity * dwell * intensity * shield transmission * geometric
    fraction * intrinsic efficiency, spread by :func:`line_response`.
    Depleted-uranium shielding adds its own emission lines; background is
    added only when the config asks for it.
    """
    if not dwell_s > 0:
        raise ValueError(f"dwell {dwell_s} must be positive")
    cal = detector.calibration
    geom = geometric_fraction(config.distance_m, detector.face_area_cm2)
    counts = np.zeros(cal.n_channels)

    for energy, intensity in config.isotope.lines:
        expected = (
            config.activity_bq
            * dwell_s
            * intensity
            * attenuation_factor(config.shielding, energy)
            * geom
            * detector.intrinsic_efficiency
        )
        counts = counts + line_response(detector, energy, expected, dwell_s).counts

    if config.shielding.material is ShieldMaterial.DEPLETED_URANIUM:
        du_activity = DU_EMISSION_BQ_PER_CM * config.shielding.thickness_cm
        for energy, intensity in DU_EMISSION_LINES:
            expected = du_activity * dwell_s * intensity * geom * detector.intrinsic_efficiency
            counts = counts + line_response(detector, energy, expected, dwell_s).counts

    if config.include_background:
        counts = counts + background_template(detector, dwell_s, background_cps).counts

    return Spectrum(counts, cal, dwell_s, SpectrumKind.EXPECTED_TEMPLATE)
