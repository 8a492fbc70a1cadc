"""mep_lab: pseudo-spectral laboratory for the modified Euler-Poisson equation.

Modules
-------
spectral
    Periodic grids, transforms, Fourier multipliers, dealiased products, norms.
eulerian
    Nonlocal-form and Euler-Poisson solvers with RK4 and blow-up detection.
lagrangian
    Flow-map solver in one dimension and cross-validation against the Eulerian one.
hamiltonian
    Functionals, variational derivatives, Poisson operators and their checks.
gevrey
    Analytic-class norms, operator bound checks, analyticity-radius fits.
harness
    Config, presets, snapshots, diagnostics and the ``mep-lab`` CLI.
"""

from .kernels import BACKEND as KERNEL_BACKEND
from .spectral import Grid

__all__ = ["Grid", "KERNEL_BACKEND"]
__version__ = "0.1.0"
