# Simulation jobs and the process pool
