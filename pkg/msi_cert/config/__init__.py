"""
Configuration management for MSI Cert
"""
