"""
IPS Package
Wi-Fi fingerprint + pedestrian dead reckoning indoor positioning toolkit
"""

__version__ = "1.0.0"
__author__ = "IPS Team"
__description__ = "Wi-Fi fingerprint and PDR indoor positioning toolkit"
