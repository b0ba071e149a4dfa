# Simulation, protocol, solver and learning services
