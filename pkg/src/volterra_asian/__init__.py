"""European and geometric Asian option pricing under Volterra-Heston models."""

from .errors import (AccuracyFailure, DivergenceError, DomainError, InvariantViolation,
                     MittagLefflerError, NumericFailure, VolterraAsianError)
from .kernel import DEFAULT_PARAMS, Kernel, ModelParams, forward_variance_0, kernel_eval, resolvent_kappa
from .numerics import MLParams, QuadratureSpec, integrate_semi_infinite, mittag_leffler
from .riccati import RiccatiPath, TransformArg, check_resolvent_form, phi1, q_form, solve_phi2
from .transform import ForwardCurve, StatePath, european_cf, psi0, psi_t
from .pricing import (OptionType, PriceResult, PricingRequest, parity_grid, parity_residuals, price,
                      price_european_call, price_fixed_asian, price_float_asian)
from .classical import classical_coefficients, classical_psi0, substitution_check
from .mc import SimSpec, mc_price, simulate_paths

__version__ = "0.1.0"
