# Baselines Module: heuristic strategies, brute-force optimum and polarization oracle
