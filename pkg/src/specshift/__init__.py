"""specshift: trace-norm increments of functions of self-adjoint matrices.

Library layout:

- ``hermitian``: dense self-adjoint core (decomposition, functional calculus,
  Schatten norms, truncation, increment ratios);
- ``catalog``: scalar test functions with derivatives and theory metadata;
- ``loewner``: divided differences, Loewner matrices, grids and the
  mixed-basis perturbation identity;
- ``search``: seeded lower-bound search for the increment-ratio seminorms;
- ``blocks``: segment refinement, amplification, divergent block families and
  direct-sum bookkeeping with symbolic multiplicities;
- ``sequences``: scalar sequence witnesses for jointly diagonal pairs;
- ``cli``: the ``specshift`` experiment runner.
"""

from .blocks import (BlockRecord, DirectSumPair, DivergentFamily, SumBlock,
                     amplify_to_unit, build_divergent_family,
                     default_delta_schedule, make_block, partial_sums,
                     segment_refine, weighted)
from .catalog import (FunctionMetadata, ScalarFunction, catalog_ids,
                      get_function, lipschitz_seminorm_estimate)
from .errors import (BadInterval, BadParams, ConfigError, ConvergenceFailure,
                     DegenerateIncrement, DegeneratePair, DomainError,
                     InvariantViolation, NonFinite, PreconditionViolated,
                     RefinementOverflow, SpecshiftError, UnknownFunction)
from .hermitian import (HermitianOperator, RatioWitness, SpectralDecomposition,
                        TraceTransferReport, apply_function, decompose,
                        increment_ratio, operator_scale, schatten_norm,
                        singular_values, spectral_truncation,
                        trace_transfer_check)
from .loewner import (FiniteSpectrumSet, LoewnerMatrix, divided_difference,
                      loewner_matrix, perturbation_identity_residual,
                      restrict_to_grid)
from .search import NORM_KINDS, SeminormLowerBound, seminorm_lower_bound
from .sequences import (DivergenceReport, LevelCheck, NotFound, SequenceWitness,
                        diagonal_embedding, divergence_check,
                        make_sequence_witness, multiplicity_sequence,
                        scalar_ratio_witnesses)

__version__ = "0.1.0"
