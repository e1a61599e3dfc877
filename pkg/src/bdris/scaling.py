"""
Analytic expected received power of the optimal design and its large-N
behaviour.

All values are returned in units of ``rho_RI * rho_IT1`` times the supplied
gains (both default to 1), so multiplying by ``P_T`` gives Watts.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import InvalidArchitecture, NonPositiveArgument, UnsupportedOperatorCount

STIRLING_MIN = 20.0
DIRICHLET_SING = 1e-6


def _stirling_tail(x):
    """``lnGamma(x) - [(x - 1/2) ln x - x + ln(2 pi)/2]`` for x >= 20."""
    y = 1.0 / (x * x)
    return (1.0 / x) * (
        1.0 / 12 - y * (1.0 / 360 - y * (1.0 / 1260 - y * (1.0 / 1680 - y / 1188)))
    )


def gamma_ratio(a, b):
    """
    ``Gamma(a) / Gamma(b)`` for positive ``a``, ``b``.

    Large arguments go through the difference of Stirling series so that the
    leading logarithms cancel analytically; a plain ``gammaln`` difference
    loses about nine digits at 1e6.
    """
    if not (a > 0 and b > 0):
        raise NonPositiveArgument(f"gamma_ratio needs positive arguments, got ({a}, {b})")
    a = float(a)
    b = float(b)
    if min(a, b) >= STIRLING_MIN:
        diff = a - b
        log_r = (
            (a - 0.5) * math.log1p(diff / b)
            + diff * math.log(b)
            - diff
            + _stirling_tail(a)
            - _stirling_tail(b)
        )
        return math.exp(log_r)
    return math.exp(gammaln(a) - gammaln(b))


def _half_ratio(x):
    """``Gamma(x + 1/2) / Gamma(x)``."""
    return gamma_ratio(x + 0.5, x)


def dirichlet_factor(Gs, dmu):
    """
    ``(1/Gs) * (sin(Gs*dmu/2) / sin(dmu/2))**2`` with the peak at ``dmu = 0 (mod 2 pi)``.

    Near the peak the quadratic expansion ``Gs * (1 - (Gs**2 - 1) dmu**2 / 12)``
    is used. The result is clipped to ``[0, Gs]``.
    """
    if Gs < 1:
        raise InvalidArchitecture("Gs must be >= 1")
    if Gs == 1:
        return 1.0
    s = math.sin(dmu / 2.0)
    if abs(s) < DIRICHLET_SING:
        delta = dmu - 2.0 * math.pi * round(dmu / (2.0 * math.pi))
        val = Gs * (1.0 - (Gs * Gs - 1) * delta * delta / 12.0)
    else:
        val = (math.sin(Gs * dmu / 2.0) / s) ** 2 / Gs
    return min(max(val, 0.0), float(Gs))


def _split(N, Gs):
    if Gs < 1 or N < 1 or N % Gs:
        raise InvalidArchitecture(f"group size {Gs} must divide N={N}")
    return N // Gs


def expected_power_rayleigh(N, Gs, L=2, rho_RI=1.0, rho_IT1=1.0):
    """
    Mean optimal power with i.i.d. Rayleigh RIS-user and BS-RIS channels.

    Parameters
    ----------
    N : int
        Number of RIS elements.
    Gs : int
        Group size (``Gs = N`` is fully connected, ``Gs = 1`` single connected).
    L : int
        Number of operators, ``L >= 2``.

    Notes
    -----
    For ``Gs >= L`` the value is quadratic in N; for ``Gs < L`` the feasible
    set is a single point and the mean is ``N``.
    """
    if L < 2:
        raise InvalidArchitecture("need L >= 2")
    G = _split(N, Gs)
    scale = rho_RI * rho_IT1
    if Gs < L:
        return N * scale
    r = _half_ratio(Gs - L + 1)
    m = G * (L - 1)
    val = (
        G * (G - 1) * r ** 4
        + math.sqrt(math.pi) * G * _half_ratio(m) * r ** 2
        + G * (Gs - L + 1) ** 2
        + G * (L - 1)
    )
    return val * scale


def expected_power_two_operator_rayleigh(N, Gs, rho_RI=1.0, rho_IT1=1.0):
    """
    Two-operator Rayleigh mean, coded separately from the general-``L`` form
    so that the two can be checked against each other.
    """
    G = _split(N, Gs)
    scale = rho_RI * rho_IT1
    if Gs == 1:
        return N * scale
    if G == 1:
        q = gamma_ratio(N - 0.5, N - 1)
        return ((N - 1) ** 2 + 0.5 * math.pi * q * q + 1) * scale
    q = gamma_ratio(Gs - 0.5, Gs - 1)
    q2 = q * q
    val = (
        G * (G - 1) * q2 * q2
        + math.sqrt(math.pi) * G * gamma_ratio(G + 0.5, G) * q2
        + G * (Gs - 1) ** 2
        + G
    )
    return val * scale


def expected_power_los(N, Gs, dmu, L=2, rho_RI=1.0, rho_IT1=1.0):
    """
    Mean optimal power with Rayleigh RIS-user channel and LoS BS-RIS channels
    whose spatial frequencies differ by ``dmu`` (two operators only).
    """
    if L != 2:
        raise UnsupportedOperatorCount("the LoS closed form is available for L = 2 only")
    G = _split(N, Gs)
    scale = rho_RI * rho_IT1
    if Gs == 1:
        return N * scale
    lf = dirichlet_factor(Gs, dmu)
    rest = max(Gs - lf, 0.0)
    q = gamma_ratio(Gs - 0.5, Gs - 1)
    val = (
        G * (G - 1) * q * q * rest
        + G * math.sqrt(math.pi * G * rest * lf) * q
        + G * (Gs - 1) * rest
        + G * lf
    )
    return val * scale


def asymptotic_kappa(Gs, L=2, channel_kind="rayleigh"):
    """
    Coefficient ``kappa`` in ``E[P] ~ kappa N**2 rho_RI rho_IT1``.

    ``Gs`` may be ``"full"`` (or None) for the fully connected architecture,
    whose coefficient is 1.
    """
    kind = channel_kind.lower()
    if kind not in ("rayleigh", "los"):
        raise ValueError(f"unknown channel kind {channel_kind!r}")
    if Gs is None or Gs == "full":
        return 1.0
    if kind == "los":
        if L != 2:
            raise UnsupportedOperatorCount("LoS coefficient is defined for L = 2")
        if Gs < 2:
            raise InvalidArchitecture("quadratic LoS scaling needs Gs >= 2")
        return _half_ratio(Gs - 1) ** 2 / Gs
    if Gs < L:
        raise InvalidArchitecture(f"Gs={Gs} < L={L}: power grows linearly, no quadratic coefficient")
    return (_half_ratio(Gs - L + 1) / math.sqrt(Gs)) ** 4


def single_operator_ratio(Gs, L):
    """Large-N power ratio between the ``L``-operator and single-operator designs."""
    if L < 2 or Gs < L:
        raise InvalidArchitecture(f"need Gs >= L >= 2, got Gs={Gs}, L={L}")
    out = 1.0
    for j in range(L - 1):
        out *= (1.0 - 1.0 / (2 * (Gs - L + j) + 3)) ** 4
    return out


@dataclass(frozen=True)
class ScalingQuery:
    """Bundle of the parameters that pick one analytic formula."""

    N: int
    Gs: int
    L: int = 2
    rho_RI: float = 1.0
    rho_IT1: float = 1.0
    channel_kind: str = "rayleigh"
    dmu: float = None

    def expected_power(self):
        kind = self.channel_kind.lower()
        if kind == "rayleigh":
            return expected_power_rayleigh(self.N, self.Gs, self.L, self.rho_RI, self.rho_IT1)
        if kind == "los":
            if self.dmu is None:
                raise ValueError("LoS query needs dmu")
            return expected_power_los(self.N, self.Gs, self.dmu, self.L, self.rho_RI, self.rho_IT1)
        raise UnsupportedOperatorCount(f"no closed form for channel kind {self.channel_kind!r}")


def dmu_from_angles(theta1, theta2):
    """Spatial-frequency gap ``pi (sin theta2 - sin theta1)``."""
    return math.pi * (math.sin(theta2) - math.sin(theta1))


def analytic_curve(N_values, Gs, L=2, channel_kind="rayleigh", dmu=None):
    """Vector of analytic means over ``N_values``; ``Gs='full'`` uses ``Gs = N``."""
    out = []
    for N in N_values:
        gs = N if Gs in ("full", None) else Gs
        out.append(ScalingQuery(N, gs, L, channel_kind=channel_kind, dmu=dmu).expected_power())
    return np.array(out)
