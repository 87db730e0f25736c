"""cqmlab: a numerical laboratory for finite-dimensional compact quantum
metric spaces and their order-unit quantum Gromov-Hausdorff geometry."""

__version__ = "0.1.0"
