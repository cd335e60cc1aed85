"""Order-completion workbench for nonlinear PDE systems."""

__version__ = "0.1.0"
