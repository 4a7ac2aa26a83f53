"""Safety engine for UAV emergency landing.

Selects landing zones from per-pixel segmentation scores, monitors the
selection at runtime through stochastic-sample uncertainty, drives the
land/retry/abort decision, and computes the risk-tailoring outcome for the
operation.
"""

__version__ = "0.1.0"
