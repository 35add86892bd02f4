"""Dirichlet Laplacian spectra of boxes and convex polygons, and universal eigenvalue ratio bounds."""

from .box_spectrum import Orthotope, Spectrum, count_below, kth_eigenvalue, spectrum_prefix
from .bounds import BoundReport, UniversalConstants, constants
from .geometry import ConvexPolygon, hatcher_sandwich, inradius, mvee
from .fem_solver import fd_spectrum, richardson_estimate
from .proof_replay import ReplayTranscript, maximal_separated_set, replay_lemma31, replay_lemma33
from .special_functions import bessel_j, first_bessel_zero, unit_ball_volume

__all__ = [
    "BoundReport",
    "ConvexPolygon",
    "Orthotope",
    "ReplayTranscript",
    "Spectrum",
    "UniversalConstants",
    "bessel_j",
    "constants",
    "count_below",
    "fd_spectrum",
    "first_bessel_zero",
    "hatcher_sandwich",
    "inradius",
    "kth_eigenvalue",
    "maximal_separated_set",
    "mvee",
    "replay_lemma31",
    "replay_lemma33",
    "richardson_estimate",
    "spectrum_prefix",
    "unit_ball_volume",
]
