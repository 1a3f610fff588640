"""Resonances of one-dimensional Schroedinger operators from a continued determinant."""

__version__ = "0.1.0"

from .surface import Sheet, SurfacePoint, from_lambda, in_sector, in_strip, lambda_of  # noqa: E402
from .potential import (Custom, PoschlTeller, PotentialSpec, SquareWell, evaluate,  # noqa: E402
                        tail_bound, zero_potential)
from .ode import FundamentalPair, JostPair, fundamental_pair, jost_pair  # noqa: E402
from .dfun import (DConfig, DEvaluator, bbD, bbD_jost, check_equivalence, d_value,  # noqa: E402
                   evans)
from .locate import (ContourSpec, ResonanceResult, count_zeros, eigenfunction,  # noqa: E402
                     find_resonances)
from .resolvent import (NystromSystem, free_resolvent, generalized_resolvent,  # noqa: E402
                        nystrom_system, riesz_projection)
