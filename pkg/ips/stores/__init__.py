"""
Stores Package
Fingerprint table persistence
"""
