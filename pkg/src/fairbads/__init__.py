"""Fair Bayesian data selection with particle posteriors aligned to a central distribution."""

__version__ = "0.1.0"
