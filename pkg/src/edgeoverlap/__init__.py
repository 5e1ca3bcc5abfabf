"""Graph comparison by edge overlap: exact enumeration and a simulated nonlinear quantum search."""
