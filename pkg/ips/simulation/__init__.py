"""
Simulation Package
Synthetic path-loss environments and the algorithm benchmark harness
"""
