"""Crack bookkeeping, criteria, fracture integrals and the quasi-static driver."""

from .criteria import (BerRecord, UnsupportedConfigurationError, ber, ber_all, ber_values, hoop_tractions,
                       propagate_max_hoop, segment_hoop_traction)
from .drive import (CriterionSpec, DisconnectionReport, DriveResult, LoadProgram, StepRecord, crack_paths,
                    criterion_values, quasi_static_drive, write_history_csv, write_polylines)
from .integrals import (ContourError, RectContour, SifPair, check_contour, contour_pieces, interaction_integral,
                        interaction_integral_sifs, j_integral, k_from_j)
from .plates import cracked_disk, hole_plate, oblique_crack_plate
from .state import CrackFace, CrackState, CrackTip, HistoryEntry, find_tips, release_segment

__all__ = [
    "BerRecord", "ContourError", "CrackFace", "CrackState", "CrackTip", "CriterionSpec", "DisconnectionReport",
    "DriveResult", "HistoryEntry", "LoadProgram", "RectContour", "SifPair", "StepRecord",
    "UnsupportedConfigurationError", "ber", "ber_all", "ber_values", "check_contour", "contour_pieces", "crack_paths",
    "cracked_disk", "criterion_values", "find_tips", "hole_plate", "hoop_tractions", "interaction_integral",
    "interaction_integral_sifs", "j_integral", "k_from_j", "oblique_crack_plate", "propagate_max_hoop",
    "quasi_static_drive", "release_segment", "segment_hoop_traction", "write_history_csv", "write_polylines",
]
