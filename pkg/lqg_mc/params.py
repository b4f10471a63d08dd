from typing import NamedTuple
import numpy as np
from .errors import DomainError, UnsupportedParameterError

GAMMA_SQRT_8_3 = np.sqrt(8.0 / 3.0)
# relative tolerance for the gamma = sqrt(8/3) gate
NATURAL_TIME_RTOL = 1e-12
SCALING_KINDS = ("area", "boundary", "natural_time")


class GammaParams(NamedTuple):
    gamma: float
    kappa: float
    kappa_prime: float
    q_charge: float
    bm_correlation: float

    def print_info(self):
        print(f"gamma\t: {self.gamma:.6f}")
        print(f"kappa\t: {self.kappa:.6f}")
        print(f"kappa'\t: {self.kappa_prime:.6f}")
        print(f"Q\t: {self.q_charge:.6f}")
        print(f"corr\t: {self.bm_correlation:.6f}")
        print("-----------------")


def make_params(gamma):
    """
    Build the coupled LQG constants for a given gamma.

    Args:
        gamma (float): LQG parameter in (0, 2).

    Returns:
        GammaParams: gamma, kappa = gamma^2, kappa' = 16/gamma^2,
        Q = 2/gamma + gamma/2 and the correlation -cos(pi gamma^2/4)
        of the mating-of-trees Brownian motion.
    """
    gamma = float(gamma)
    if not (0 < gamma < 2) or not np.isfinite(gamma):
        raise DomainError(f"gamma must lie in (0, 2), got {gamma}")
    return GammaParams(
        gamma=gamma,
        kappa=gamma**2,
        kappa_prime=16.0 / gamma**2,
        q_charge=2.0 / gamma + gamma / 2.0,
        bm_correlation=-np.cos(np.pi * gamma**2 / 4.0),
    )


def is_sqrt_8_3(params):
    gamma = params.gamma if isinstance(params, GammaParams) else float(params)
    return abs(gamma - GAMMA_SQRT_8_3) <= NATURAL_TIME_RTOL * GAMMA_SQRT_8_3


class BesselDimensions:
    def __init__(self, params):
        self.params = params
        gamma = params.gamma
        self.sphere_dim = 4.0 - 8.0 / gamma**2
        self.disk_dim = 3.0 - 4.0 / gamma**2

    def cone_dim(self, alpha_weight):
        # time-reversed BES driver of an alpha-quantum cone
        gamma, q = self.params.gamma, self.params.q_charge
        return 2.0 + (4.0 / gamma) * (q - alpha_weight)

    def excursion_dim(self, dimension):
        # an excursion of nu_delta is a bridge of dimension 4 - delta
        return 4.0 - dimension


def sphere_area_exponent(params):
    # density exponent of the total area under the Bessel sphere measure
    return -4.0 / params.gamma**2


# density exponent of the total area under the stable-excursion sphere measure
LEVY_AREA_EXPONENT = -1.5


class ScalingAction(NamedTuple):
    shift_c: float

    def area_factor(self, params):
        return np.exp(params.gamma * self.shift_c)

    def boundary_factor(self, params):
        return np.exp(params.gamma * self.shift_c / 2.0)

    def natural_time_factor(self, params):
        if not is_sqrt_8_3(params):
            raise UnsupportedParameterError(
                f"natural time is only defined for gamma = sqrt(8/3), got {params.gamma}"
            )
        return np.exp(3.0 * params.gamma * self.shift_c / 4.0)

    def compose(self, other):
        return ScalingAction(self.shift_c + other.shift_c)


def apply_scaling(action, quantity, kind, params):
    """
    Rescale a quantum quantity under the field shift h -> h + C.

    :param action: ScalingAction holding C
    :param quantity: value (or array) to rescale
    :param kind: one of "area", "boundary", "natural_time"
    :param params: GammaParams
    :return: rescaled quantity
    """
    if kind == "area":
        factor = action.area_factor(params)
    elif kind == "boundary":
        factor = action.boundary_factor(params)
    elif kind == "natural_time":
        factor = action.natural_time_factor(params)
    else:
        raise DomainError(f"unknown scaling kind: {kind}, expected one of {SCALING_KINDS}")
    return quantity * factor


def shift_for_area(area, params):
    # shift C that maps total area `area` to 1
    return -np.log(area) / params.gamma


def shift_for_boundary(boundary_length, params, target=1.0):
    return (2.0 / params.gamma) * np.log(target / boundary_length)
