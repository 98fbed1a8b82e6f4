"""quadlab: a simulation and verification lab for random planar quadrangulations.

Exact samplers for labeled trees, Schaeffer-type encodings, Budd's lazy
peeling, discrete snake metrics (D, Delta, dagger), finite metric-measure
spaces with GHP upper bounds, and a Monte Carlo verification harness.
"""

__version__ = "0.1.0"
