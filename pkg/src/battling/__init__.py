"""Equilibria of games where influencers pull an affine receiver toward their targets."""

from .align import (AlignmentScenario, affine_approx_check, alignment_dynamics,
                    empirical_best_response, mle_fit, theoretical_ne_oracle)
from .finite import (FiniteGameSpec, build_expne_instance, enumerate_pure_ne,
                     finite_best_response, finite_br_dynamics, finite_potential, is_pure_ne)
from .game import GameSpec, SpecError, validate_spec
from .geometry import Ball, Box, VertexPolytope
from .potential import player_loss, potential, potential_gradient, receiver_aggregate
from .report import emit_report
from .solvers import (best_response, br_dynamics, classify_cardinality, exaggeration_audit,
                      pgd_solve, verify_pure_ne)
from .wdse import wdse_solve, wdse_verify

__version__ = "0.1.0"

__all__ = [
    "AlignmentScenario", "Ball", "Box", "FiniteGameSpec", "GameSpec", "SpecError",
    "VertexPolytope", "affine_approx_check", "alignment_dynamics", "best_response",
    "br_dynamics", "build_expne_instance", "classify_cardinality", "emit_report",
    "empirical_best_response", "enumerate_pure_ne", "exaggeration_audit",
    "finite_best_response", "finite_br_dynamics", "finite_potential", "is_pure_ne",
    "mle_fit", "pgd_solve", "player_loss", "potential", "potential_gradient",
    "receiver_aggregate", "theoretical_ne_oracle", "validate_spec", "verify_pure_ne",
    "wdse_solve", "wdse_verify",
]
