"""
Trackers Package
Pedestrian dead reckoning and the fingerprint-seeded fused tracker
"""
