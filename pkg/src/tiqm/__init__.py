"""Single-photon linear-optics simulator with offer/confirmation wave bookkeeping."""

from .optics import H, V, OpticalNetwork, PolarizedAmplitude, render_dirac, scattering_matrix, validate
from .scenarios import build_ev, build_zeno, zeno_analytics
from .transactions import echo_report, monte_carlo, repeated_ev, select_transaction
from .waves import analyze, probe_report, propagate_confirmation, propagate_offer

__version__ = "0.1.0"
