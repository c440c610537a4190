"""Tests for order-of-magnitude rate estimates and regime classification."""

import math

import pytest

from exchangelab.estimates import (
    MediumParams,
    REDUCED_PLANCK,
    VACUUM_PERMITTIVITY,
    cooperative_raman_rate,
    dipole_dipole_rate,
    nearest_neighbor_distance,
    regime_classify,
)


EXAMPLE = MediumParams(
    density=1.0e24,
    omega=2.4e15,
    dipole=3.0e-29,
    detuning=1.0e11,
    rabi=1.0e10,
    gamma=1.0e7,
    wavenumber=8.0e6,
    t2=1.0e-6,
)


def test_physical_constants():
    assert VACUUM_PERMITTIVITY == 8.8541878128e-12
    assert REDUCED_PLANCK == 1.054571817e-34


def test_cooperative_rate_frozen_value():
    # sqrt(1e24 * 2.4e15 / (eps0 * hbar)) * 3e-29 * 1e10 / 1e11, by hand
    rate = cooperative_raman_rate(EXAMPLE)
    assert rate == pytest.approx(4.8097e12, rel=1e-4)


def test_cooperative_rate_scalings():
    base = cooperative_raman_rate(EXAMPLE)

    def vary(**kwargs):
        fields = {name: getattr(EXAMPLE, name) for name in
                  ("density", "omega", "dipole", "detuning", "rabi",
                   "gamma", "wavenumber", "t2")}
        fields.update(kwargs)
        return cooperative_raman_rate(MediumParams(**fields))

    assert vary(density=4.0e24) == pytest.approx(2.0 * base, rel=1e-12)
    assert vary(omega=4 * 2.4e15) == pytest.approx(2.0 * base, rel=1e-12)
    assert vary(dipole=6.0e-29) == pytest.approx(2.0 * base, rel=1e-12)
    assert vary(rabi=2.0e10) == pytest.approx(2.0 * base, rel=1e-12)
    assert vary(detuning=2.0e11) == pytest.approx(0.5 * base, rel=1e-12)
    # only the drive-to-detuning ratio matters
    assert vary(rabi=3.0e10, detuning=3.0e11) == pytest.approx(base, rel=1e-12)


def test_dipole_dipole_rate():
    gamma = 2.0e7
    k = 1.0e7
    assert dipole_dipole_rate(gamma, k, 1.0 / k) == pytest.approx(gamma, rel=1e-12)
    assert dipole_dipole_rate(gamma, k, 0.5 / k) == pytest.approx(8 * gamma, rel=1e-12)
    near = dipole_dipole_rate(gamma, k, 2.0e-7)
    far = dipole_dipole_rate(gamma, k, 4.0e-7)
    assert near / far == pytest.approx(8.0, rel=1e-12)


def test_nearest_neighbor_distance():
    assert nearest_neighbor_distance(1.0e24) == pytest.approx(1.0e-8, rel=1e-12)
    # at the typical spacing the dipole rate reduces to gamma * density / k^3
    gamma, k, density = 3.0e7, 2.0e6, 5.0e19
    rate = dipole_dipole_rate(gamma, k, nearest_neighbor_distance(density))
    assert rate == pytest.approx(gamma * density / k ** 3, rel=1e-12)


def test_regime_high_density_dipole_limited():
    report = regime_classify(density=5.0e20, wavenumber=1.0e6, gamma=1.0e7,
                             t2=1.0e-3, cooperative_rate=1.0e12)
    assert report.density_parameter == pytest.approx(500.0)
    assert report.regime == "high-density"
    assert report.dipole_rate == pytest.approx(1.0e7 * 500.0, rel=1e-12)
    assert report.dominant_channel == "dipole-dipole"
    assert report.dominant_rate == report.dipole_rate
    assert report.cooperation_wins


def test_regime_low_density_dephasing_limited():
    report = regime_classify(density=1.0e17, wavenumber=1.0e6, gamma=1.0e8,
                             t2=1.0e-10, cooperative_rate=1.0e6)
    assert report.density_parameter == pytest.approx(0.1)
    assert report.regime == "low-density"
    assert report.dominant_channel == "dephasing"
    assert report.dominant_rate == pytest.approx(1.0e10)
    assert not report.cooperation_wins


def test_regime_boundary_counts_as_high_density():
    report = regime_classify(density=1.0e18, wavenumber=1.0e6, gamma=1.0e7,
                             t2=1.0, cooperative_rate=1.0e9)
    assert report.density_parameter == pytest.approx(1.0)
    assert report.regime == "high-density"


def test_regime_scale_invariance():
    a = regime_classify(density=2.0e18, wavenumber=1.5e6, gamma=1.0e7,
                        t2=1.0e-4, cooperative_rate=1.0e9)
    s = 3.7
    b = regime_classify(density=s ** 3 * 2.0e18, wavenumber=s * 1.5e6,
                        gamma=1.0e7, t2=1.0e-4, cooperative_rate=1.0e9)
    assert b.density_parameter == pytest.approx(a.density_parameter, rel=1e-12)
    assert b.regime == a.regime
    assert b.dipole_rate == pytest.approx(a.dipole_rate, rel=1e-12)


def test_report_payload():
    report = regime_classify(density=5.0e20, wavenumber=1.0e6, gamma=1.0e7,
                             t2=1.0e-3, cooperative_rate=1.0e12)
    payload = report.to_payload()
    assert payload["schema_version"] == 1
    assert payload["kind"] == "regime_report"
    assert payload["regime"] == "high-density"
    assert isinstance(payload["cooperation_wins"], bool)


def test_validation():
    with pytest.raises(ValueError):
        MediumParams(density=-1.0, omega=1.0, dipole=1.0, detuning=1.0,
                     rabi=1.0, gamma=1.0, wavenumber=1.0, t2=1.0)
    with pytest.raises(ValueError):
        MediumParams(density=1.0, omega=1.0, dipole=1.0, detuning=1.0,
                     rabi=1.0, gamma=1.0, wavenumber=1.0, t2=float("nan"))
    with pytest.raises(ValueError):
        dipole_dipole_rate(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        nearest_neighbor_distance(0.0)
    with pytest.raises(ValueError):
        regime_classify(density=0.0, wavenumber=1.0, gamma=1.0, t2=1.0,
                        cooperative_rate=1.0)
