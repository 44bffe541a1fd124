"""Digital-twin-integrated federated anomaly detection simulator."""

__version__ = "0.1.0"
