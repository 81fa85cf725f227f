"""Newsfeed ranking for the human-participant phase.

Two scoring variants share the pipeline. Before the participant has
interacted with anyone, posts are ranked by a composite popularity score
(comments and reposts weigh double a like). Once an interaction history
exists, the collaborative variant blends normalized popularity, ideological
proximity between the participant's estimated opinion and the author's, and
a fresh uniform noise term per (message, request) that keeps the feed
churning between requests.

A bias condition fixes the pro:contra author-stance mix per served page
(70/30, 50/50, or 30/70); when one stance pool runs short the page is
backfilled from the other, so pages stay full until both pools are empty.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .kernels import Rng
from .model import Message, stance_sign


class Polarization(str, Enum):
    POLARIZED = "polarized"
    MODERATE = "moderate"


class Bias(str, Enum):
    PRO = "pro"
    BALANCED = "balanced"
    CONTRA = "contra"

    @property
    def pro_ratio(self) -> float:
        return {Bias.PRO: 0.7, Bias.BALANCED: 0.5, Bias.CONTRA: 0.3}[self]


@dataclass(frozen=True)
class ConditionSpec:
    polarization: Polarization
    bias: Bias
    snapshot_ref: Optional[str] = None

    def to_dict(self) -> dict:
        return {"polarization": self.polarization.value, "bias": self.bias.value}


@dataclass(frozen=True)
class FeedWeights:
    """Convex mix of popularity, ideological proximity, and noise."""

    popularity: float = 0.6
    ideology: float = 0.2
    noise: float = 0.2

    def __post_init__(self) -> None:
        if min(self.popularity, self.ideology, self.noise) < 0:
            raise ValueError("feed weights must be non-negative")
        if abs(self.popularity + self.ideology + self.noise - 1.0) > 1e-9:
            raise ValueError("feed weights must sum to 1")

    def to_dict(self) -> dict:
        return {
            "popularity": self.popularity,
            "ideology": self.ideology,
            "noise": self.noise,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeedWeights":
        return cls(
            popularity=d.get("popularity", 0.6),
            ideology=d.get("ideology", 0.2),
            noise=d.get("noise", 0.2),
        )


def popularity_score(message: Message) -> float:
    """Likes count once, comments and reposts twice."""
    return message.likes + 2 * message.comments + 2 * message.reposts


def collaborative_score(
    message: Message,
    user_opinion: float,
    author_opinion: float,
    max_popularity: float,
    weights: FeedWeights,
    noise: float,
) -> float:
    """Blend of normalized popularity, ideological proximity, and noise.

    The popularity term is defined as 0 when the whole pool is untouched
    (max score 0). All three terms live in [0, 1], so convex weights keep
    the blend in [0, 1].
    """
    pop = popularity_score(message) / max_popularity if max_popularity > 0 else 0.0
    proximity = (2.0 - abs(user_opinion - author_opinion)) / 2.0
    return weights.popularity * pop + weights.ideology * proximity + weights.noise * noise


@dataclass
class RankedPools:
    """Stance-partitioned candidate rankings for one feed request.

    ``rank`` maps message id to its position in the combined score order,
    used to lay out each served page by descending score.
    """

    pro: list[Message]
    contra: list[Message]
    rank: dict[int, int]

    @property
    def total(self) -> int:
        return len(self.pro) + len(self.contra)


def rank_candidates(
    candidates: Sequence[Message],
    author_opinion: dict[int, float],
    user_opinion: Optional[float],
    weights: FeedWeights,
    rng: Rng,
) -> RankedPools:
    """Score and partition the candidate posts for one request.

    Noise draws happen in ascending message-id order, one per candidate,
    taken from the per-session stream, so rankings are replayable. With no
    interaction history yet, raw popularity ranks (default variant).
    """
    scores: dict[int, float] = {}
    ordered = sorted(candidates, key=lambda m: m.id)
    if user_opinion is None:
        for msg in ordered:
            scores[msg.id] = popularity_score(msg)
    else:
        s_max = max((popularity_score(m) for m in ordered), default=0.0)
        for msg in ordered:
            scores[msg.id] = collaborative_score(
                msg,
                user_opinion,
                author_opinion[msg.author_id],
                s_max,
                weights,
                rng.random(),
            )
    ranked = sorted(ordered, key=lambda m: (-scores[m.id], -m.id))
    pro = [m for m in ranked if stance_sign(author_opinion[m.author_id]) > 0]
    contra = [m for m in ranked if stance_sign(author_opinion[m.author_id]) < 0]
    return RankedPools(pro=pro, contra=contra, rank={m.id: i for i, m in enumerate(ranked)})


def pro_slots(bias: Bias, page_size: int) -> int:
    """Half-up rounding of the pro quota; the remainder of the page is contra."""
    return int(bias.pro_ratio * page_size + 0.5)


def page_slice(pools: RankedPools, bias: Bias, page: int, page_size: int) -> tuple[list[Message], bool]:
    """Fill page ``page`` (1-based) under the bias quota with backfill.

    Earlier pages are re-derived so that backfill on a partially exhausted
    pool shifts later pages consistently within this request's ranking.
    Selected items are ordered by descending score within the page.
    """
    if page < 1:
        raise ValueError("pages are 1-based")
    quota_pro = pro_slots(bias, page_size)
    quota_contra = page_size - quota_pro
    pro_used = contra_used = 0
    chosen: list[Message] = []
    for _ in range(page):
        take_pro = min(quota_pro, len(pools.pro) - pro_used)
        take_contra = min(quota_contra, len(pools.contra) - contra_used)
        # Backfill shortfalls from the other pool.
        short = (quota_pro - take_pro) + (quota_contra - take_contra)
        if short > 0:
            extra_contra = min(short, len(pools.contra) - contra_used - take_contra)
            take_contra += extra_contra
            short -= extra_contra
            extra_pro = min(short, len(pools.pro) - pro_used - take_pro)
            take_pro += extra_pro
        chosen = pools.pro[pro_used : pro_used + take_pro] + pools.contra[
            contra_used : contra_used + take_contra
        ]
        pro_used += take_pro
        contra_used += take_contra
    remaining = pools.total - pro_used - contra_used
    chosen.sort(key=lambda m: pools.rank[m.id])
    return chosen, remaining > 0
