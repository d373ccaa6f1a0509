"""Soft random geometric graphs: entropy limits, typicality and distributed coding."""

from .connection import ConnectionProfile, SparsitySchedule, check_assumptions, eval_p, hstar_integral, sparsity
from .errors import (AssumptionError, ConfigError, DimensionError, DomainError, ImpossibleRealizationError,
                     NumericError, SizeError, SrggError)
from .geometry import SQUARE, TORUS2, DomainSpec, distance, pair_distance_density, pairwise_distances, sample_points
from .infotheory import (TypicalityParams, binary_entropy, conditional_entropy, edge_term_variance, h_star,
                         info_density, is_typical)
from .pairs import pair_index, pair_indices
from .sampler import Srgg, read_graph, sample_srgg, write_graph

__version__ = "0.1.0"
