"""
Structured-grid finite element analysis.

This package contains:
- mesh.py: Q4/Hex8 structured meshes and lookups
- elements.py: material model and reference element stiffness
- solver.py: assembly, Dirichlet elimination, direct/CG solves, objectives
- stress.py: element-centre von Mises stress
"""
