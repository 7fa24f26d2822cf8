"""Direct nonlinear Fourier transform of the Zakharov-Shabat system with
sixth-order conservative one-step schemes, conventional and fast."""
from .pauli import EvenOddCoeffs, Mat2, apply_even_odd, decompose, eigen_lambda, matexp
from .propagator import (
    PotentialGrid,
    ScatteringData,
    bidirectional_b,
    phase_coefficient,
    scatter,
    scatter_grid,
)
from .schemes import SchemeKind, applicability, coeffs, transition, transition_derivative
from .fastlayer import MobiusMap, TransferPoly, evaluate, fast_scatter, product_tree, step_polynomial
from .signals import SignalSpec, generate, load_file

__version__ = "0.1.0"
