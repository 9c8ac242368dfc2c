"""
Transfer logic: shape paths, contact mapping, refinement, hand fitting and grasp metrics.
"""
