"""exkit: exchangeability certificates, de Finetti approximants and mean-field energies.

Two-site symmetric states on C^d (x) C^d are tested for exchangeability through a
single d^2 x d^2 real symmetric matrix; finite-size states are pulled into the
exchangeable set with an explicit O(1/N) trace-distance bound; mean-field ground
state energy densities are computed variationally over product states.
"""

from exkit.hermitian_core import (
    flip_operator,
    hermitian_basis,
    partial_trace,
    permute_sites,
    random_density,
    random_hermitian,
    symmetric_projector,
    tensor,
    trace_distance,
)
from exkit.definetti_maps import m_inverse, m_map, v_inverse, v_map
from exkit.exchange_cert import (
    CertificateReport,
    bb_decompose,
    certify_exchangeable,
    cone_decompose,
    gram_form,
)
from exkit.finite_size import (
    c_coefficient,
    distance_to_exchangeable_upper,
    exchangeable_approximant,
    n_extendability_necessary,
)
from exkit.meanfield import PairInteraction, bcs_interaction, e0, exact_ground_energy

__version__ = "0.1.0"

__all__ = [
    "CertificateReport",
    "PairInteraction",
    "bb_decompose",
    "bcs_interaction",
    "c_coefficient",
    "certify_exchangeable",
    "cone_decompose",
    "distance_to_exchangeable_upper",
    "e0",
    "exact_ground_energy",
    "exchangeable_approximant",
    "flip_operator",
    "gram_form",
    "hermitian_basis",
    "m_inverse",
    "m_map",
    "n_extendability_necessary",
    "partial_trace",
    "permute_sites",
    "random_density",
    "random_hermitian",
    "symmetric_projector",
    "tensor",
    "trace_distance",
    "v_inverse",
    "v_map",
]
