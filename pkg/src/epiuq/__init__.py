"""Bi-fidelity uncertainty quantification for multiscale epidemic transport.

A kinetic discrete-ordinates model (high fidelity) and a two-velocity
hyperbolic model (low fidelity), both advanced by a shared asymptotic-
preserving IMEX finite-volume scheme, feed a greedy low-fidelity-informed
collocation that builds cheap surrogates of high-fidelity statistics.
"""

from .bifidelity import (BiFiBasis, SnapshotSet, bifi_eval, bifi_stats,
                         greedy_select, project_coefficients,
                         relative_l2_error)
from .collocation import (BoxDomain, QuadratureRule, StatField,
                          cc_sparse_grid, estimate_stats, uniform_candidates)
from .diffusion import diffusion_run, diffusion_step
from .epidemic import (CompartmentSet, EpidemicParameters, incidence,
                       reproduction_number_seiar, reproduction_number_sir)
from .errors import (ConditioningError, ConfigError, DomainError, EpiuqError,
                     NumericsError, RankDeficiencyError,
                     UndefinedReproductionNumber)
from .grid import Grid1D, minmod, reconstruct
from .highfi import hf_run, hf_step, kinetic_init, moments
from .imex import (ImexTableau, StiffRelaxation, compute_dt, gsa_check,
                   gsa_imex_442, imex_advance)
from .lowfi import lf_run, lf_step
from .pipeline import PipelineReport, run_pipeline
from .scenarios import (ScenarioConfig, baseline_reproduction_number,
                        build_scenario, build_test1, build_test2)
from .states import (KineticState, MacroState, TransportConfig,
                     VelocityQuadrature)

__version__ = "0.1.0"
