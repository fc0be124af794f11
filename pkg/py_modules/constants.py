"""
Constants for the Carnot boundary-Schauder toolkit
Centralized configuration for tolerances, sampling, Monte Carlo and concurrency settings
"""

# Numerical tolerances
TOLERANCES = {
    "CHARACTERISTIC": 1e-8,        # |grad_H phi| below this flags a characteristic point
    "GRAD_NORM": 1e-12,            # |grad_H d(e)| below this is treated as zero
    "POLY_REPRODUCTION": 1e-12,    # residual floor for exact reproduction checks
    "FD_DATA": 1e-6,               # default consistency threshold for finite-difference jets
    "ELLIPTIC_SLACK": 1e-12,       # eigenvalue slack in the ellipticity check
    "GRAPH_NORMALIZATION": 1e-10,  # |h(0)|, |grad_x' h(0)| allowed in numeric graphs
    "RATIONAL_DENOMINATOR": 10**12,  # limit_denominator for float -> Fraction conversions
}

# Sampling for decay regressions and probes
SAMPLING = {
    "RADII_EXPONENTS": (3, 10),    # dyadic radii 2^-3 .. 2^-10
    "SAMPLES_PER_RADIUS": 200,     # gauge-ball samples per radius
    "MAX_REJECTION_ROUNDS": 50,    # rejection sampling rounds before giving up on a shell
    "HOLDER_MAX_PAIRS": 200_000,   # pair budget for the Holder seminorm estimate
    "BOUNDARY_SAMPLES": 400,       # boundary samples for scans and distances
    "PROBE_PAIRS": 4000,           # pairs for the distance comparison probe
    "VOLUME_SAMPLES": 1_000_000,   # samples per ball for the volume ratio
    "FD_STEP": 1e-3,               # default finite-difference step
}

# Monte Carlo Dirichlet oracle
MONTE_CARLO = {
    "BLOCK_SIZE": 4096,            # paths simulated together
    "DRAW_CHUNK": 64,              # steps of normals drawn per path at a time
    "MAX_STEPS": 400_000,          # steps before a path is declared stuck
    "DEFAULT_DT": 1e-4,
    "DEFAULT_PATHS": 100_000,
    "GENERATOR_FACTOR": 0.5,       # the walk p o exp(sqrt(dt) zeta) has generator (1/2) Delta_H
}

# Lipschitz barrier scan
BARRIER = {
    "BOUNDARY_BOUND": 1.0,         # M-bar, bound of |u| on the boundary
    "SAMPLES": 400,
    "FD_STEP": 1e-3,
    "K_MAX": 12,
    "TANGENT_BALL_SAMPLES": 2000,
}

# Boundary geometry
GEOMETRY = {
    "NONTANGENTIAL_A": 0.25,       # comparability constant a, ratios must lie in [a, 1/a]
    "NONTANGENTIAL_OFFSETS": (0.5, 0.25, 0.75, 1.0, 0.125),
    "PROJECTION_ITERATIONS": 30,   # Newton steps when projecting samples onto {phi = 0}
    "SCAN_HALF_WIDTH": 1.0,
}

# Size limits
LIMITS = {
    "MAX_STEP_FOR_DYNKIN": 8,      # Dynkin word tables are enumerated up to this step
    "MAX_CACHE_GROUPS": 32,
}

# Concurrency limits
CONCURRENCY = {
    "MAX_SHARDS": 4,               # concurrent suite shards
}

# Default values
DEFAULTS = {
    "SEED": 7,
    "LOG_LEVEL": "INFO",
    "ALPHA": 0.5,
    "GAUGE_BALL_RADIUS": 1.0,
}

# Acceptance battery sizes
SUITE = {
    "GROUPS": ("heisenberg1", "heisenberg2", "free_step2(3)", "engel"),
    "LAW_TRIALS": 100,
    "FIELD_TRIALS": 50,
    "APPROX_GROUPS": ("heisenberg1", "heisenberg2", "engel"),
    "APPROX_ORDERS": (2, 3, 4),
    "APPROX_TRIALS": 20,
    "DISTANCE_PERTURBATIONS": 3,
    "COMPANION_PAIRS": 5,
    "MC_PATHS": 100_000,
    "MC_DT": 1e-4,
    "SLOPE_TOLERANCE": 0.2,
    "SLOPE_TOLERANCE_WIDE": 0.5,
    "VOLUME_TOLERANCE": 0.05,
}
