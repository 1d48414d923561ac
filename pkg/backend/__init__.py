# Gaussian Ensemble Topology backend
