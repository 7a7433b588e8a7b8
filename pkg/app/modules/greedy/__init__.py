# Greedy Module: exact and sketched greedy edge selection
