# Dynamics Module: stochastic simulation of noisy leader-follower opinions
