"""Simulation engine for curvature-steered chemotaxis on the unit torus.

Subpackages cover the closed-form steering model (:mod:`formica.core`),
spectrally resolved chemical fields (:mod:`formica.spectral`), the
interacting-particle Monte-Carlo simulator (:mod:`formica.particles`),
the autonomous angle analyzer (:mod:`formica.azimuthal`), the reduced
finite-difference solver with its two-state extension (:mod:`formica.fd`),
heat-kernel verification (:mod:`formica.kernels`) and the experiment
runner (:mod:`formica.config`, :mod:`formica.cli`).
"""

__version__ = "0.1.0"
