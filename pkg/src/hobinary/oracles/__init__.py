"""Independent reference solutions: finite differences, Monte Carlo and adaptive quadrature."""
