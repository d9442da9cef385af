# src/lab/__init__.py
"""
Numerical modules of the lab.

torus       periodic geometry, grids and grid fields
spectral    transforms, multipliers and negative Sobolev norms
densities   bounded density families, sampling and quantization
kernels     bump kernel, its Fourier transform, smoothing and multiplier sums
transport   exact and entropic Wasserstein solvers
bounds      executable inequality checks producing BoundReport records
"""
