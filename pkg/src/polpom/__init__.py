"""Optimal generalized polarization measurements on trine and tetrad states."""

from polpom.ensembles import Ensemble, antitetrad, antitrine, get_ensemble, tetrad, trine, verify_overcomplete
from polpom.infotheory import (
    ConditionalTable,
    MiReport,
    accessible_info_reference,
    best_von_neumann_mi,
    mutual_information,
    shannon_entropy,
)
from polpom.network import (
    ModeAmplitudes,
    OpticalNetwork,
    detection_distribution,
    effective_pom,
    propagate,
    tetrad_network,
    trine_network,
    wp5_sweep,
)
from polpom.noise import NoiseModel, estimate_gamma, mi_antistates, mi_states, monte_carlo_mi, noisy_pom
from polpom.polarization import (
    PolarizationOperator,
    PolarizationState,
    StokesVector,
    half_waveplate,
    prepare_state,
    quarter_waveplate,
    stokes,
)
from polpom.pom import Pom, PomElement, check_optimality, error_probability, min_error_pom, outcome_probability

__version__ = "0.1.0"
