"""Light-field microscopy simulation and 3D reconstruction.

Forward model and adjoint, Richardson-Lucy deconvolution, and a
self-supervised two-branch network trained on disjoint view subsets.
"""

__version__ = "0.1.0"
