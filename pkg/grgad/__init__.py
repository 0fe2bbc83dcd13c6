"""Group-level graph anomaly detection: anchor location, group sampling,
topology-pattern contrastive embedding and group scoring."""

__version__ = "0.3.0"
