"""One-bit passive localization toolkit.

Per-node time-delay estimation from one-bit quantized baseband samples,
range quantization for a low-rate uplink, and fusion-center localization
via a moment semidefinite relaxation or a fast alternating solver, with
Cramer-Rao bound tooling and a Monte Carlo benchmark harness.
"""

__version__ = "0.1.0"
