"""
Persistence: meshes, SDF grids and run artifacts on the local filesystem.
"""
