"""Flow matching on Riemannian symmetric spaces via the Cartan decomposition."""

__version__ = "0.1.0"
