"""Branching random walks with geometric steps, their random self-similar
measures, and the deterministic Bernoulli-convolution counterparts."""
from .errors import (BRWError, CoverFailed, DegenerateRange, DegreeOverflow, DepthTooLarge,
                     DigitSetUnsupported, ExactModeUnavailable, InvalidParameters, NonConvergent,
                     NonMonic, QOutsideHull, ReduciblePolynomial, ResidualOutOfRange,
                     RootFindingFailure)
from .kernels import BACKEND
from .params import ParameterSet, digit_sum_value
from .polynomial import IntPolynomial, classify
from .algebra import AlgebraicValue, reduce
from .tree import (DEFAULT_SEED, GWCluster, LabelOracle, distinct_prefixes, gw_cluster,
                   leaf_values, survival_curve)
from .measure import Histogram, WeightedAtoms, histogram, mu_n, nu_n, tv_distance
from .fourier import (SobolevEstimate, SpectrumSample, eta_hat, expected_mu_hat_sq,
                      mc_mu_hat_sq, mu_hat_sq_upper_bound, nu_hat, sobolev_norm)
from .intervals import IntervalSet
from .expansions import (CoverReport, ExpansionState, children, count_prefixes, cover_check,
                         eq_star_depth, greedy, lemma31_constant)
from .support import GapReport, gap_depth, gaps, separation_constant, support_cover
from .probe import ClusterDiagnostic, ProbeReport, gap_neighborhood_probe, run_probes

__version__ = "0.1.0"
