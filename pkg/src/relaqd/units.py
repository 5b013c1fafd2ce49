"""Conversions between Hartree atomic units and laboratory units.

Everything inside the package is in atomic units (hbar = m_e = e = 1).
These helpers exist so scenario files and reports can speak eV, keV,
attoseconds, V/m and W/cm^2.
"""

import numpy as np

C_AU = 137.035999
HARTREE_EV = 27.211386245988
AU_TIME_AS = 24.188843265857
AU_FIELD_V_PER_M = 5.14220674763e11
# cycle-averaged intensity 0.5*eps0*c*E^2 of a linearly polarized wave with E = 1 a.u.
AU_INTENSITY_W_PER_CM2 = 3.50944758e16


def ev_to_au(energy_ev):
    return energy_ev / HARTREE_EV


def kev_to_au(energy_kev):
    return energy_kev * 1e3 / HARTREE_EV


def au_to_ev(energy):
    return energy * HARTREE_EV


def au_to_kev(energy):
    return energy * HARTREE_EV * 1e-3


def as_to_au(t_as):
    return t_as / AU_TIME_AS


def au_to_as(t):
    return t * AU_TIME_AS


def momentum_kev_per_c_to_au(p_kev, c=C_AU):
    """Momentum given as pc in keV, returned in a.u. of momentum."""
    return kev_to_au(p_kev) / c


def momentum_au_to_kev_per_c(p, c=C_AU):
    return au_to_kev(p * c)


def field_v_per_m_to_au(field):
    return field / AU_FIELD_V_PER_M


def intensity_to_field_amplitude(intensity_w_cm2, convention="peak"):
    """Electric field amplitude (a.u.) of one linearly polarized beam.

    ``convention="peak"`` reads the intensity as the instantaneous peak of
    the Poynting flux, I = eps0*c*E^2; ``"cycle-averaged"`` uses
    I = eps0*c*E^2/2.
    """
    if convention == "peak":
        return float(np.sqrt(intensity_w_cm2 / (2.0 * AU_INTENSITY_W_PER_CM2)))
    if convention in ("cycle-averaged", "average"):
        return float(np.sqrt(intensity_w_cm2 / AU_INTENSITY_W_PER_CM2))
    raise ValueError(f"unknown intensity convention {convention!r}")
