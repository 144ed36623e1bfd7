"""Numerical toolkit for exterior Navier-Stokes asymptotics.

Modules:
    fields      field handles, grids, finite differences, weighted norms
    landau      exact point-force solutions and the |b| <-> A bijection
    oseen       heat kernel, Stokes fundamental tensor, pressure kernel
    potentials  space-time potential operators and convolution estimates
    decomp      force decomposition and divergence-free boundary extensions
    perturbed   Picard solver for the perturbed system, self-similarity checks
    flux        momentum-flux tensor and asymptotic parameter extraction
    verify      invariant registry backing the verify-all report
    cli         command-line front end
"""

__version__ = "0.1.0"
