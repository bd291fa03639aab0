"""Central numeric tolerances used across the package.

Every module compares against these constants instead of scattering
magic numbers; tests import them so the contract stays in one place.
"""

import os

# entrywise equality of matrices / vectors
ENTRY_TOL = 1e-12
# mass balance (marginal sums, kernel row sums)
MASS_TOL = 1e-10
# constraint feasibility residuals
FEAS_TOL = 1e-9
# strict-violation margin a certificate must clear
CERT_TOL = 1e-9
# relative duality-gap bound: |primal - dual| <= GAP_TOL * (1 + |value|)
GAP_TOL = 1e-7
# minimax equality and saddle-point residuals for games
GAME_TOL = 1e-8
# chain-transport duality equality
CHAIN_TOL = 1e-6


def default_tol() -> float:
    """Default gap tolerance; the VECOT_TOL environment variable overrides it."""
    raw = os.environ.get("VECOT_TOL")
    if raw is None:
        return GAP_TOL
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"VECOT_TOL must parse as a float, got {raw!r}") from None
    if value <= 0.0:
        raise ValueError("VECOT_TOL must be positive")
    return value
