"""
Schemas Package
Domain models for the positioning system
"""
