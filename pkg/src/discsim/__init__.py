"""Distributed soft coding (DISC) with SISO relay encoders for parallel relay networks."""

__version__ = "0.1.0"

from .codes import (
    CodeEnsemble,
    GeneratorSequence,
    LinkSnrProfile,
    PairingAssignment,
    ber_approx,
    exact_mhd,
    gsw,
    is_noncatastrophic,
    mhd_bound,
    optimal_pairing,
    pairing_oracle,
    rho,
)
from .soft import siso_encode, prob_inference_encode, sbe_from_llr, llr_from_sbe, boxplus_llr
from .channel import LinkBudget, bpsk_modulate, transmit, draw_realization
from .relay import SchemeConfig, run_frame, joint_bcjr_decode

__all__ = [
    "CodeEnsemble", "GeneratorSequence", "LinkSnrProfile", "PairingAssignment", "ber_approx",
    "exact_mhd", "gsw", "is_noncatastrophic", "mhd_bound", "optimal_pairing", "pairing_oracle",
    "rho", "siso_encode", "prob_inference_encode", "sbe_from_llr", "llr_from_sbe",
    "boxplus_llr", "LinkBudget", "bpsk_modulate", "transmit", "draw_realization",
    "SchemeConfig", "run_frame", "joint_bcjr_decode",
]
