"""
MSI Cert - stability certification of aperiodically sampled linear systems
"""

__version__ = "1.0.0"
__author__ = "MSI Cert Team"
