"""Closed-form probability kernels and samplers driving agent behaviour.

The reaction model composes three pieces:

    P_react = base_prob * ((1 - w) + w * strength(o_i)) * alignment(o_i, o_m)

where ``strength`` is a sigmoid of the agent's opinion magnitude and
``alignment`` is a similarity term plus a cross-ideology-weighted opposition
term, both sharpened by an exponent. With a zero cross-ideology weight the
alignment curve decays monotonically with opinion distance; with a positive
weight it turns into an asymmetric U shape whose interior minimum sits near
the sigmoid midpoint, so agents engage with strongly aligned content and,
for the more active interaction types, with strongly opposed content too.

Everything here is a pure function except ``Rng``, a single-owner seeded
stream. One run of the system funnels every stochastic decision through one
``Rng`` in a documented order, which is what makes byte-identical replay
possible.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Union

from .model import Agent, validate_opinion


class SamplerStuck(RuntimeError):
    """Raised when rejection sampling fails 1000 times in a row."""


@dataclass(frozen=True)
class SigmoidParams:
    """Logistic transition: steepness scales the slope, midpoint centers it."""

    steepness: float = 10.0
    midpoint: float = 0.5

    def __post_init__(self) -> None:
        if self.steepness <= 0:
            raise ValueError("sigmoid steepness must be > 0")
        if not 0.0 <= self.midpoint <= 2.0:
            raise ValueError("sigmoid midpoint must be in [0, 2]")


@dataclass(frozen=True)
class ReactionParams:
    """Parameters of one interaction type (like, repost, comment, or follow)."""

    base_prob: float
    strength_weight: float
    cross_ideology: float
    exponent: float = 10.0
    sigmoid: SigmoidParams = field(default_factory=SigmoidParams)

    def __post_init__(self) -> None:
        if not 0.0 <= self.base_prob <= 1.0:
            raise ValueError("base_prob must be in [0, 1]")
        if not 0.0 <= self.strength_weight <= 1.0:
            raise ValueError("strength_weight must be in [0, 1]")
        if not 0.0 <= self.cross_ideology <= 1.0:
            raise ValueError("cross_ideology must be in [0, 1]")
        if self.exponent <= 0:
            raise ValueError("exponent must be > 0")


def like_params() -> ReactionParams:
    return ReactionParams(base_prob=0.7, strength_weight=0.8, cross_ideology=0.0)


def repost_params() -> ReactionParams:
    return ReactionParams(base_prob=0.3, strength_weight=0.8, cross_ideology=0.1)


def comment_params() -> ReactionParams:
    return ReactionParams(base_prob=0.3, strength_weight=0.8, cross_ideology=0.5)


def follow_params() -> ReactionParams:
    return ReactionParams(base_prob=0.5, strength_weight=0.0, cross_ideology=0.0)


@dataclass(frozen=True)
class PostingParams:
    """Per-step posting probabilities; influencers must be the more active."""

    regular_prob: float = 0.2
    influencer_prob: float = 0.6

    def __post_init__(self) -> None:
        if not 0.0 <= self.regular_prob <= 1.0:
            raise ValueError("regular_prob must be in [0, 1]")
        if not 0.0 <= self.influencer_prob <= 1.0:
            raise ValueError("influencer_prob must be in [0, 1]")
        if self.influencer_prob <= self.regular_prob:
            raise ValueError("influencer_prob must exceed regular_prob")


@dataclass(frozen=True)
class NormalOpinions:
    """Single normal density restricted to [-1, 1]; moderate communities."""

    mu: float = 0.0
    sigma: float = 0.1

    def __post_init__(self) -> None:
        validate_opinion(self.mu)
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")

    def to_dict(self) -> dict:
        return {"shape": "normal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class BimodalOpinions:
    """Even mixture of two normals restricted to [-1, 1]; polarized communities."""

    mu1: float = 0.8
    mu2: float = -0.8
    sigma: float = 0.1

    def __post_init__(self) -> None:
        validate_opinion(self.mu1)
        validate_opinion(self.mu2)
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")

    def to_dict(self) -> dict:
        return {
            "shape": "bimodal",
            "mu1": self.mu1,
            "mu2": self.mu2,
            "sigma": self.sigma,
        }


OpinionDistribution = Union[NormalOpinions, BimodalOpinions]


def distribution_from_dict(d: dict) -> OpinionDistribution:
    shape = d["shape"]
    if shape == "normal":
        return NormalOpinions(mu=d["mu"], sigma=d["sigma"])
    if shape == "bimodal":
        return BimodalOpinions(mu1=d["mu1"], mu2=d["mu2"], sigma=d["sigma"])
    raise ValueError(f"unknown opinion distribution shape {shape!r}")


class Rng:
    """Seeded Mersenne-Twister stream with a fixed draw discipline.

    Every helper funnels through ``random()`` (the one generator method with
    a cross-version stability guarantee): ``bernoulli`` consumes exactly one
    draw, ``normal`` exactly two (explicit Box-Muller, no caching of the
    second variate), ``pick``/``index`` exactly one. Identical seeds therefore
    give identical draw sequences on every platform.

    An Rng is single-owner: never share one instance between concurrent
    tasks; give parallel runs independently seeded streams.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._r = random.Random(self.seed)

    def random(self) -> float:
        return self._r.random()

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return low + (high - low) * self._r.random()

    def bernoulli(self, p: float) -> bool:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"bernoulli p={p} outside [0, 1]")
        return self._r.random() < p

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        # Box-Muller; 1-random() keeps the log argument in (0, 1].
        u1 = 1.0 - self._r.random()
        u2 = self._r.random()
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def index(self, n: int) -> int:
        if n < 1:
            raise ValueError("index needs n >= 1")
        return min(int(self._r.random() * n), n - 1)

    def pick(self, seq):
        return seq[self.index(len(seq))]


def sigmoid(x: float, params: SigmoidParams) -> float:
    """Logistic transition mapping a difference onto (0, 1); increasing in x."""
    z = params.steepness * (x - params.midpoint)
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def opinion_strength(opinion: float, params: SigmoidParams) -> float:
    """Baseline reactivity boost for extreme opinions; even in the opinion."""
    return sigmoid(abs(opinion), params)


def alignment_components(delta: float, params: ReactionParams) -> tuple[float, float]:
    """(similarity, opposition) terms for an opinion distance, each in [0, 1]."""
    s = sigmoid(delta, params.sigmoid)
    return (1.0 - s) ** params.exponent, s**params.exponent


def alignment_factor(o_i: float, assessed: float, params: ReactionParams) -> float:
    """Similarity plus cross-ideology-weighted opposition; range [0, 1 + c]."""
    sim, opp = alignment_components(abs(o_i - assessed), params)
    return sim + params.cross_ideology * opp


def reaction_probability(o_i: float, assessed: float, params: ReactionParams) -> float:
    """Probability that an agent reacts to a message it assesses as ``assessed``.

    The alignment factor can exceed 1 when the cross-ideology weight is
    positive and the distance extreme, so the composed product is clamped
    to [0, 1]; at the default parameter sets the clamp never binds.
    """
    strength = (1.0 - params.strength_weight) + params.strength_weight * opinion_strength(
        o_i, params.sigmoid
    )
    p = params.base_prob * strength * alignment_factor(o_i, assessed, params)
    return max(0.0, min(1.0, p))


def posting_probability(agent: Agent, params: PostingParams) -> float:
    return params.influencer_prob if agent.is_influencer else params.regular_prob


_MAX_REJECTS = 1000


def sample_opinion(dist: OpinionDistribution, rng: Rng) -> float:
    """Draw one opinion, rejection-resampling anything outside [-1, 1].

    Bimodal draws pick a mode with probability 1/2 each attempt (one
    bernoulli draw, then two normal draws); rejection repeats the whole
    attempt so the restricted mixture density is respected. Clamping is
    deliberately avoided: it would pile probability mass onto the
    endpoints and blur "polarized" into "extreme".
    """
    for _ in range(_MAX_REJECTS):
        if isinstance(dist, BimodalOpinions):
            mu = dist.mu1 if rng.bernoulli(0.5) else dist.mu2
            value = rng.normal(mu, dist.sigma)
        else:
            value = rng.normal(dist.mu, dist.sigma)
        if -1.0 <= value <= 1.0:
            return value
    raise SamplerStuck(
        f"{_MAX_REJECTS} consecutive rejections sampling {dist!r}; "
        "the configured density has almost no mass inside [-1, 1]"
    )
