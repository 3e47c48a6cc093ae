"""
Utility modules for MSI Cert
"""
