"""Audits and fits that turn trajectories into verdicts."""

from .energy import EnergyReport, energy_audit
from .envelopes import EnvelopeAuditReport, envelope_audit, envelope_constants
from .fits import (FitRefused, FitResult, NormVerdict, clean_window, fit_exponent,
                   fit_power_law, fit_trajectory, predicted_exponent, predicted_theta_rate)
from .profiles import (Cone, ProfileReport, m_tilde, predicted_profile, profile_compare,
                       profile_compare_fields, tail_exponent_probe)
from .splitting import SplitReport, fourier_splitting_audit, splitting_radius

__all__ = [
    "Cone", "EnergyReport", "EnvelopeAuditReport", "FitRefused", "FitResult", "NormVerdict",
    "ProfileReport", "SplitReport", "clean_window", "energy_audit", "envelope_audit",
    "envelope_constants", "fit_exponent", "fit_power_law", "fit_trajectory",
    "fourier_splitting_audit", "m_tilde", "predicted_exponent", "predicted_profile",
    "predicted_theta_rate", "profile_compare", "profile_compare_fields", "splitting_radius",
    "tail_exponent_probe",
]
