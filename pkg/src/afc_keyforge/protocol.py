"""One key-generation round: log pre-processing, over-the-air sum, exp post-processing."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelRealization, complex_normal
from .gaussint import GaussianInt, norm, product


class DegenerateChannelError(ArithmeticError):
    """The estimated gain is zero or the post-processed value overflowed."""


@dataclass(frozen=True)
class NodeState:
    index: int
    own_prime: GaussianInt

    @property
    def own_log(self) -> complex:
        return cmath.log(complex(self.own_prime))


@dataclass(frozen=True)
class RoundOutcome:
    """Per-node recovered keys.

    A receiver whose round degenerated has ``recovered_key`` None and
    ``noisy_norm`` NaN, and shows up in ``failed``.
    """

    recovered_key: tuple[Optional[complex], ...]
    noisy_norm: tuple[float, ...]
    true_key: GaussianInt
    true_norm: int

    @property
    def failed(self) -> tuple[bool, ...]:
        return tuple(k is None for k in self.recovered_key)


def preprocess(x: GaussianInt, estimated_gain: complex) -> complex:
    """Principal log of the prime divided by the estimated gain."""
    if estimated_gain == 0:
        raise DegenerateChannelError("estimated channel gain is zero")
    if x.re == 0 and x.im == 0:
        raise ValueError("cannot take the log of zero")
    return cmath.log(complex(x)) / estimated_gain


def postprocess(y: complex) -> complex:
    try:
        out = cmath.exp(y)
    except OverflowError as exc:
        raise DegenerateChannelError("post-processing overflowed") from exc
    if not (math.isfinite(out.real) and math.isfinite(out.imag)):
        raise DegenerateChannelError("post-processing overflowed")
    return out


def run_round(
    nodes: Sequence[NodeState],
    realization: ChannelRealization,
    sigma_n: float,
    rng: np.random.Generator,
) -> RoundOutcome:
    """Every node transmits ``ln(x_i)/g_hat_ij`` to every other node in its own slot.

    Receiver ``j`` sees ``g_ij * ln(x_i)/g_hat_ij`` attenuated by path loss plus
    thermal noise, scales the path loss back out (which scales the noise up),
    sums the slots, adds its own log and exponentiates.
    """
    if len(nodes) < 2:
        raise ValueError("a round needs at least two nodes")
    if sigma_n < 0:
        raise ValueError("sigma_n must be non-negative")
    logs = [n.own_log for n in nodes]
    keys: list[Optional[complex]] = []
    norms: list[float] = []
    for j, rx in enumerate(nodes):
        total = 0j
        failed = False
        for i in range(len(nodes)):
            if i == j:
                total += logs[j]
                continue
            link = realization.link(nodes[i].index, rx.index)
            if sigma_n > 0:
                noise = complex_normal(rng, sigma_n**2) / link.pathloss_amplitude
            else:
                noise = 0j
            if link.estimated_gain == 0:
                failed = True
                continue
            total += link.effective_gain * logs[i] + noise
        key = None
        if not failed:
            try:
                key = postprocess(total)
            except DegenerateChannelError:
                key = None
        keys.append(key)
        norms.append(abs(key) ** 2 if key is not None else math.nan)
    true_key = product(n.own_prime for n in nodes)
    return RoundOutcome(tuple(keys), tuple(norms), true_key, norm(true_key))
