# Experiments Module: run protocol, benchmarks, property validation and persistence
