"""Phase estimation with two bosonic modes in a Mach-Zehnder interferometer.

Submodules
----------
fock            truncated two-mode Fock space, ladder/Schwinger operators
interferometer  beam-splitter and Mach-Zehnder unitaries, phase generator
metrology       quantum/classical Fisher information, fidelity, bounds
optimal         closed forms, ON/NOON states, maximum-QFI optimizer
correlations    mode-relative separability witness
estimate        Monte Carlo maximum-likelihood harness
cli             command-line front end
"""
__version__ = "0.1.0"

from .fock import FockSpace, MixedState, Operator, PureState, make_space  # noqa: E402
from .interferometer import BeamSplitterParam, MzSetting, extract_generator, mz_unitary  # noqa: E402
from .metrology import cfi, fidelity, qfi_pure, qfi_sld  # noqa: E402
from .optimal import noon_state, on_state, optimize_max_qfi  # noqa: E402
from .estimate import ExperimentConfig, PhaseEstimator, run_experiment  # noqa: E402

__all__ = [
    "FockSpace",
    "MixedState",
    "Operator",
    "PureState",
    "make_space",
    "BeamSplitterParam",
    "MzSetting",
    "extract_generator",
    "mz_unitary",
    "cfi",
    "fidelity",
    "qfi_pure",
    "qfi_sld",
    "noon_state",
    "on_state",
    "optimize_max_qfi",
    "ExperimentConfig",
    "PhaseEstimator",
    "run_experiment",
]
