from typing import Any, Callable, Dict, List, Tuple

import numpy as np

# Point or vector in the plane
Vec2 = Tuple[float, float]

# 2x2 derivative matrix in (r, phi) coordinates
Matrix = np.ndarray

# Parsed table definition: family name and its parameters
TableDefinition = Dict[str, Any]

# Ordered list of (rule-id, message) entries of a validation report
RuleMessages = List[Tuple[str, str]]

# Callback invoked with every collision event of an orbit
Observer = Callable[[Any], None]

# Y-axis values and X-axis edges of a histogram
Histogram = Tuple[np.ndarray, np.ndarray]
