"""
Core analysis: delay operator, IQCs, LMI backend, certification, MSI search and simulation
"""
