from .orchestrator import build_spectrum_graph
from .spectrum import compute_spectrum
from .rect_solver import solve_at_theta
from .ordering import precedes

__all__ = [
    "build_spectrum_graph",
    "compute_spectrum",
    "solve_at_theta",
    "precedes",
]
