"""
SlitFlow: simulation and verification of slit holomorphic stochastic flows
and their coupling with modified Gaussian free fields.
"""

__version__ = '0.1'
