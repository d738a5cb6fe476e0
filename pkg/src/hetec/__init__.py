"""Transpiler, scheduler and resource estimator for surface-code compute
coupled to gross-code memory."""

__version__ = "0.1.0"
