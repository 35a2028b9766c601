"""Federated parking-occupancy forecasting and the operator/vehicle incentive game."""

__version__ = "0.1.0"
