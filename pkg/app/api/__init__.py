"""
API layer for the FD-MIMO simulator
"""
