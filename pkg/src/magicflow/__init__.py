"""Magic classes of qudit states under the iterated quantum-convolution flow."""
from .clifford import (CliffordCircuit, Gate, apply, canonical_form, canonicalize, is_clifford,
                       random_clifford)
from .convolution import (ConvParams, FlowTrace, convolve3_char, convolve3_dense, convolve_char,
                          convolve_dense, find_params, flow_power, iterate, key_unitary_qubit,
                          self_convolve, validate_qubit_duality)
from .errors import *  # noqa: F401,F403
from .magic import (MagicClassReport, MeanState, classify, entropy_bound, entropy_deficit,
                    magic_gap, mean_state, required_iterations, same_cg_class, symmetry_count)
from .operators import (CharFunction, DensityOperator, char_function, inverse_char,
                        trace_distance, von_neumann_entropy, weyl_matrix)
from .phase_space import IsotropicSubgroup, PhasePoint, symplectic_product
from .states import psi_k, random_isotropic_subgroup, random_pure_state, zero_state

__version__ = "0.1.0"
