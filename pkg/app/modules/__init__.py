# Feature modules for the modular monolith
