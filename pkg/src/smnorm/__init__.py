"""Smoothness quasi-norms of sampled functions by Fourier bands, differences and oscillations."""

from .core import (CorpusSpec, GeometryError, Grid, GridFunIOError, ParameterError,
                   SampledFunction, SmoothnessParams, ValidatedParams, make_grid, params,
                   parse_corpus_spec, sample, validate_params, with_params)
from .differences import delta_n, delta_n_domain, diff_local_mean, diff_quasinorm, diff_seminorm
from .estimators import (DifferenceNorm, DyadicOscillationNorm, LittlewoodPaleyNorm,
                         OscillationNorm)
from .geometry import (ConvexPolytope, FullTorus, Interval, SpecialLipschitz, admissible_steps,
                       ball_quadrature, domain_metrics, grid_for_domain, membership,
                       parse_domain, regular_polygon)
from .harness import compare_norms, refinement_study, sweep, whitney_check
from .io import read_config, read_gridfun, write_gridfun
from .lp import build_partition, lp_band, lp_norm
from .morrey import (RadiusLadder, default_ladder, local_average_term, morrey_norm,
                     power_identity_check)
from .oscillation import (DegenerateBall, build_local_basis, clubsuit_norm, osc, osc_quasinorm,
                          osc_seminorm, project)
from .report import NormReport

__version__ = "0.1.0"
