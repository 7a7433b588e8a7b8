# Leader Polarization - Modular Monolith
