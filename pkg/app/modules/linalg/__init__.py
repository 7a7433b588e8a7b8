# Linear Algebra Module: dense inverses, SDD solves and random sketches
