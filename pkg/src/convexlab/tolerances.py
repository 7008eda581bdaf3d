"""Per-check tolerance table.

Every mesh-based check uses tolerance = C * h^2 * scale, where h is the mesh
size, scale the natural magnitude of the quantity (so tolerances are
relative), and C a fixed constant calibrated once on the reference families.
Halving h should roughly quarter identity residuals; the constants leave
about a 3x safety margin over observed residuals at the reference levels.
"""

H2_CONSTANTS = {
    "reilly": 2.0,
    "eigen-lower-bound": 5.0,
    "ros": 1.0,
    "hersch": 2.0,
    "nn3-area": 1.0,
    "nn3-volume": 1.0,
    "sec0-pi1-area": 1.0,
    "sec1-pi0-area": 1.0,
    "ric2-pi0-area-8pi": 1.0,
    "conj2-area": 1.0,
    "shi-tam": 1.0,
    "mean-curvature-insufficiency": 1.0,
    "quotient-constant-value": 2.0,
    "trace-inequality": 1.0,
    "topology": 0.0,       # integer ranks: exact
}


def tolerance(check_id: str, h: float, scale: float = 1.0) -> float:
    return H2_CONSTANTS[check_id] * h * h * abs(scale)
