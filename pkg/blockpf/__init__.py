"""
blockpf: bootstrap particle filtering with a block-adaptive number of particles.

Sequential Monte Carlo library and experiment harness. The filter assesses
itself online through predictive rank (A) and predictive CDF (B) statistics
and adjusts its particle count block by block.
"""

__version__ = "1.0.0"
