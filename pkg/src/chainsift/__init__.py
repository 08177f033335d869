"""chainsift: illicit-transaction detection under label scarcity.

Supervised baselines, unsupervised anomaly-detection benchmarking at
fixed contamination (alert) rates, and an active-learning engine that
acquires labels incrementally from a simulated or human oracle.
"""

__version__ = "0.1.0"
