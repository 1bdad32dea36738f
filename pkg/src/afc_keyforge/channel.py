"""Reciprocal Rician links with free-space path loss and channel-estimation error."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
import numpy as np
from scipy.special import i0e

SPEED_OF_LIGHT = 299_792_458.0
REFERENCE_DISTANCE_M = 1.0


@dataclass(frozen=True)
class RicianParams:
    """Unit-power Rician fading; ``k_factor`` is linear and may be ``math.inf``."""

    k_factor: float
    mean_power: float = 1.0

    def __post_init__(self):
        if not self.k_factor >= 0:
            raise ValueError("k_factor must be non-negative")
        if self.mean_power != 1.0:
            raise ValueError("only unit mean power is supported")

    @property
    def los_amplitude(self) -> float:
        if math.isinf(self.k_factor):
            return 1.0
        return math.sqrt(self.k_factor / (self.k_factor + 1.0))

    @property
    def sigma(self) -> float:
        """Per-component scale of the diffuse part, so its total power is 2*sigma**2."""
        if math.isinf(self.k_factor):
            return 0.0
        return math.sqrt(0.5 / (self.k_factor + 1.0))

    def implied_k(self) -> float:
        s2 = 2.0 * self.sigma**2
        return math.inf if s2 == 0 else self.los_amplitude**2 / s2


def complex_normal(rng: np.random.Generator, variance: float, size=None):
    """Circularly symmetric complex Gaussian with total variance ``variance``."""
    scale = math.sqrt(variance / 2.0)
    if size is None:
        z = rng.standard_normal(2)
        return complex(scale * z[0], scale * z[1])
    z = rng.standard_normal((2, *np.atleast_1d(size)))
    return scale * (z[0] + 1j * z[1])


def sample_small_scale(params: RicianParams, rng: np.random.Generator) -> complex:
    """One fading gain: real LOS amplitude plus a circularly symmetric diffuse term."""
    z = rng.standard_normal(2)
    return complex(params.los_amplitude + params.sigma * z[0], params.sigma * z[1])


def rician_envelope_pdf(x, params: RicianParams):
    """Density of ``|g|``; scaled Bessel keeps large arguments finite."""
    x = np.asarray(x, dtype=float)
    s2 = params.sigma**2
    nu = params.los_amplitude
    arg = x * nu / s2
    return x / s2 * np.exp(-((x - nu) ** 2) / (2 * s2)) * i0e(arg)


@dataclass(frozen=True)
class Geometry:
    """Node positions in metres plus the carrier wavelength and antenna gains."""

    positions: tuple[tuple[float, float], ...]
    wavelength: float
    tx_gain: float = 1.0
    rx_gain: float = 1.0

    def __post_init__(self):
        if self.wavelength <= 0 or self.tx_gain <= 0 or self.rx_gain <= 0:
            raise ValueError("wavelength and antenna gains must be positive")
        for i, j in combinations(range(len(self.positions)), 2):
            if self.distance(i, j) <= 0:
                raise ValueError(f"nodes {i} and {j} share a position")

    @classmethod
    def equidistant(cls, node_count: int, distance_m: float, carrier_hz: float = 2.4e9) -> "Geometry":
        """Nodes on a regular polygon with side ``distance_m``.

        For two or three nodes every pair is exactly ``distance_m`` apart.
        """
        if node_count < 2:
            raise ValueError("need at least two nodes")
        if node_count == 2:
            pts = ((0.0, 0.0), (distance_m, 0.0))
        else:
            radius = distance_m / (2 * math.sin(math.pi / node_count))
            pts = tuple(
                (radius * math.cos(2 * math.pi * k / node_count), radius * math.sin(2 * math.pi * k / node_count))
                for k in range(node_count)
            )
        return cls(pts, SPEED_OF_LIGHT / carrier_hz)

    @property
    def node_count(self) -> int:
        return len(self.positions)

    def distance(self, i: int, j: int) -> float:
        (xi, yi), (xj, yj) = self.positions[i], self.positions[j]
        return math.hypot(xi - xj, yi - yj)


def pathloss_amplitude(d: float, geom: Geometry, mode: str = "normalized") -> float:
    """Amplitude attenuation over distance ``d``.

    ``physical`` is the square root of the free-space power ratio
    ``Gt*Gr*(lambda/(4*pi*d))**2``; ``normalized`` is ``d0/d`` with d0 = 1 m.
    """
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    if mode == "physical":
        return math.sqrt(geom.tx_gain * geom.rx_gain) * geom.wavelength / (4 * math.pi * d)
    if mode == "normalized":
        return REFERENCE_DISTANCE_M / d
    raise ValueError(f"unknown path-loss mode {mode!r}")


@dataclass(frozen=True)
class LinkRecord:
    true_gain: complex
    estimated_gain: complex
    pathloss_amplitude: float

    # Both ratios are written in residual form so a perfect estimate gives exactly 1.
    @property
    def estimation_ratio(self) -> complex:
        """Estimated over true gain."""
        return 1 + (self.estimated_gain - self.true_gain) / self.true_gain

    @property
    def effective_gain(self) -> complex:
        """True over estimated gain: what survives transmitter-side inversion."""
        return 1 - (self.estimated_gain - self.true_gain) / self.estimated_gain


@dataclass(frozen=True)
class ChannelRealization:
    """One frame of reciprocal links, keyed by the sorted node pair."""

    links: dict[tuple[int, int], LinkRecord] = field(default_factory=dict)

    def link(self, i: int, j: int) -> LinkRecord:
        if i == j:
            raise KeyError("no self-link")
        return self.links[(i, j) if i < j else (j, i)]


def realize(
    geom: Geometry,
    params: RicianParams,
    sigma_h: float,
    rng: np.random.Generator,
    mode: str = "normalized",
) -> ChannelRealization:
    """Draw one gain and one estimation error per unordered pair.

    Both ends of a link see the same gain and the same estimate.
    """
    if geom.node_count < 2:
        raise ValueError("need at least two nodes")
    if sigma_h < 0:
        raise ValueError("sigma_h must be non-negative")
    links = {}
    for i, j in combinations(range(geom.node_count), 2):
        g = sample_small_scale(params, rng)
        w = complex_normal(rng, sigma_h**2) if sigma_h > 0 else 0j
        links[(i, j)] = LinkRecord(g, g + w, pathloss_amplitude(geom.distance(i, j), geom, mode))
    return ChannelRealization(links)
