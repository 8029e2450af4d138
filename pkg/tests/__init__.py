"""
Test package for the thermal link entanglement engine.
"""
