"""Resilient distributed state estimation over spoofed asynchronous networks.

Library layout:

* lti        -- plant model, diagonalization, per-node detectability
* graphs     -- directed graphs and strong-robustness checks
* observers  -- local Luenberger observers with Schur-stability validation
* medag      -- per-mode trusted-parent discovery, verification, motifs
* filtering  -- trimming-based consensus update
* adversary  -- smart-spoofer policies and the capacity ledger
* engine     -- deterministic discrete-time simulation loop
* config     -- JSON run configs, validation, topology preflight
* scenarios  -- the two built-in demonstration scenarios
* reporting  -- CSV/JSON exports and figures
* cli        -- command-line entry point
"""

from .adversary import beta_from_capacity, impersonation_feasible
from .config import RunConfig, load_config, preflight
from .engine import SimEngine, SimTrace, run, snapshot_metrics
from .errors import SpoofSimError
from .filtering import beta_prime, filtered_update, trim_extremes
from .graphs import (DirectedGraph, TimeVaryingGraph, jointly_strongly_robust,
                     max_strong_robustness, r_reachable, strongly_robust_bruteforce,
                     strongly_robust_peel)
from .lti import (DiagonalizedSystem, LtiSystem, ModeSets, ObservationModel,
                  detectable_modes, diagonalize, source_sets, step_truth,
                  transform_initial)
from .medag import (FLAG_TRUE, assign_layers, enumerate_motifs, kbar_bound,
                    medag_threshold, verify_srmedag)
from .observers import LuenbergerObserver, design_gain, luenberger_step
from .scenarios import scenario_s1, scenario_s2

__version__ = "0.1.0"
