"""Heritage-constrained generative studio backend for the Kaiping Diaolou."""

__version__ = "0.1.0"
