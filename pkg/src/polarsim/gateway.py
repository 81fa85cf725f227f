"""Content generation and opinion assessment behind one interface.

Two modes share the interface. Live mode speaks an HTTP JSON chat-completion
protocol against a configured endpoint (model name and API-key environment
variable are config fields) with bounded retries, a per-run response cache
keyed by prompt hash, and an optional request budget. Stub mode is a
deterministic offline generator: template banks keyed by (stance sign,
intensity tier, message kind) with a seeded pick, always embedding at least
one lexicon keyword of the matching sign. The stub performs zero network
activity, which makes engine-level statistical tests exact.

Prompt assembly renders five components for message generation: the opinion
value phrased as strong/moderate/weak positive/negative, the topic
description, the personality profile, a summary of recent interactions, and
intensity instructions tied to the opinion magnitude. Replies additionally
carry the parent message with an instruction to directly address, agree, or
disagree with specific points from it.
"""

from __future__ import annotations

import hashlib
import os
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import httpx

from .kernels import Rng
from .model import Agent, MemoryKind, Message, MessageKind, Topic, clamp_opinion, stance_sign

MAX_MESSAGE_CHARS = 500


class GatewayError(RuntimeError):
    pass


class RemoteUnavailable(GatewayError):
    pass


class BudgetExhausted(GatewayError):
    pass


class EmptyCompletion(GatewayError):
    pass


class UnparsableAssessment(GatewayError):
    pass


class MissingReplyContext(GatewayError):
    pass


class MissingApiKey(GatewayError):
    pass


class IntensityTier(str, Enum):
    LOW = "low"
    MODERATE = "moderate"
    HIGH = "high"


def intensity_tier(opinion: float) -> IntensityTier:
    """Tier from opinion magnitude; 0.3 and 0.7 both belong to the middle tier."""
    mag = abs(opinion)
    if mag < 0.3:
        return IntensityTier.LOW
    if mag <= 0.7:
        return IntensityTier.MODERATE
    return IntensityTier.HIGH


INTENSITY_INSTRUCTIONS = {
    IntensityTier.LOW: (
        "Keep the tone balanced: acknowledge multiple perspectives, use "
        "conditional statements, avoid group labels, and emphasize uncertainty "
        "about your own position."
    ),
    IntensityTier.MODERATE: (
        "Show a clear directional lean and in-group preference with moderate "
        "skepticism of opposing views; emotional undertones are fine as long "
        "as the discourse stays reasoned."
    ),
    IntensityTier.HIGH: (
        "Express strong conviction and emotional investment. Use strong "
        "emotional language, pronounced group identification, and hyperbolic "
        "terminology, and portray opposing views as threats."
    ),
}

_TIER_WORD = {
    IntensityTier.LOW: "weak",
    IntensityTier.MODERATE: "moderate",
    IntensityTier.HIGH: "strong",
}


class ComponentKind(str, Enum):
    OPINION_VALUE = "opinion_value"
    TOPIC_DESCRIPTION = "topic_description"
    PERSONALITY_PROFILE = "personality_profile"
    INTERACTION_HISTORY = "interaction_history"
    INTENSITY_INSTRUCTIONS = "intensity_instructions"
    REPLY_CONTEXT = "reply_context"


@dataclass(frozen=True)
class PromptComponent:
    kind: ComponentKind
    text: str


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    components: tuple[PromptComponent, ...]

    def component(self, kind: ComponentKind) -> Optional[str]:
        for c in self.components:
            if c.kind is kind:
                return c.text
        return None


@dataclass(frozen=True)
class StubMode:
    """Offline deterministic generator; noise_sigma perturbs stub assessments."""

    noise_sigma: float = 0.0
    lexicon_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class LiveMode:
    """Remote chat-completion endpoint configuration."""

    endpoint_url: str
    model_name: str
    api_key_env_var: str = "POLARSIM_API_KEY"
    timeout: float = 30.0
    max_retries: int = 2
    backoff_base: float = 0.5

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class GatewayConfig:
    mode: Union[StubMode, LiveMode] = field(default_factory=StubMode)
    request_budget: Optional[int] = None


@dataclass(frozen=True)
class MessageDraft:
    """Generated text plus internal stance tag; the template tag identifies
    which (sign, tier, kind) family produced a stub draft."""

    text: str
    stance_meta: float
    template_tag: Optional[str] = None


@dataclass(frozen=True)
class Persona:
    personality: str
    biography: str
    username: str


# ---------------------------------------------------------------------------
# Lexicon

DEFAULT_LEXICON_PRO = (
    "dignity",
    "security",
    "fairness",
    "freedom",
    "opportunity",
    "stability",
    "wellbeing",
    "empowerment",
)

DEFAULT_LEXICON_CONTRA = (
    "inflation",
    "dependency",
    "taxes",
    "freeloading",
    "unaffordable",
    "bureaucracy",
    "laziness",
    "waste",
)


def load_lexicon(path: str) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Lexicon file format: one keyword per line, prefixed '+' or '-'."""
    pro: list[str] = []
    contra: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("+"):
                pro.append(line[1:].strip().lower())
            elif line.startswith("-"):
                contra.append(line[1:].strip().lower())
            else:
                raise ValueError(f"lexicon line must start with '+' or '-': {line!r}")
    if not pro or not contra:
        raise ValueError("lexicon needs at least one '+' and one '-' keyword")
    return tuple(pro), tuple(contra)


# ---------------------------------------------------------------------------
# Prompt assembly

def _opinion_phrase(opinion: float) -> str:
    tier = _TIER_WORD[intensity_tier(opinion)]
    side = "positive" if stance_sign(opinion) > 0 else "negative"
    return (
        f"You hold a {tier} {side} opinion (value: {opinion:+.2f}) on this topic."
    )


def _history_summary(agent: Agent) -> str:
    if not agent.memory:
        return "You have not interacted with anyone on this topic yet."
    verbs = {
        MemoryKind.AUTHORED_POST: "posted message",
        MemoryKind.AUTHORED_COMMENT: "commented with message",
        MemoryKind.AUTHORED_REPOST: "reposted as message",
        MemoryKind.SAW_MESSAGE: "read message",
        MemoryKind.LIKED: "liked message",
        MemoryKind.COMMENTED: "replied to message",
        MemoryKind.REPOSTED: "shared message",
    }
    parts = [f"{verbs[e.kind]} #{e.message_id}" for e in agent.memory]
    return "Recently you " + "; ".join(parts) + "."


def assemble_prompt(
    agent: Agent,
    topic: Topic,
    kind: MessageKind,
    reply_to: Optional[Message] = None,
) -> PromptBundle:
    """Render the five generation components (plus reply context for replies)."""
    if kind is not MessageKind.POST and reply_to is None:
        raise MissingReplyContext(f"generating a {kind.value} requires the parent message")
    opinion = agent.opinion if agent.opinion is not None else 0.0
    tier = intensity_tier(opinion)
    components = [
        PromptComponent(ComponentKind.OPINION_VALUE, _opinion_phrase(opinion)),
        PromptComponent(
            ComponentKind.TOPIC_DESCRIPTION,
            f"The topic is {topic.name}, {topic.description}.",
        ),
        PromptComponent(ComponentKind.PERSONALITY_PROFILE, agent.personality),
        PromptComponent(ComponentKind.INTERACTION_HISTORY, _history_summary(agent)),
        PromptComponent(ComponentKind.INTENSITY_INSTRUCTIONS, INTENSITY_INSTRUCTIONS[tier]),
    ]
    if reply_to is not None:
        components.append(
            PromptComponent(
                ComponentKind.REPLY_CONTEXT,
                f"You are writing a {kind.value} on this message by "
                f"user #{reply_to.author_id}: \"{reply_to.text}\". Directly "
                "address, agree, or disagree with specific points or ideas "
                "from it.",
            )
        )
    system_text = "\n".join(c.text for c in components)
    task = {
        MessageKind.POST: "Write one short social-media post (under 400 characters).",
        MessageKind.COMMENT: "Write one short reply (under 400 characters).",
        MessageKind.REPOST: "Write one short quote-repost remark (under 400 characters).",
    }[kind]
    return PromptBundle(system_text=system_text, user_text=task, components=tuple(components))


def build_assessment_prompt(agent: Agent, message: Message, topic: Topic) -> PromptBundle:
    """Prompt asking for a single decimal stance rating in [-1, 1]."""
    opinion = agent.opinion if agent.opinion is not None else 0.0
    components = (
        PromptComponent(ComponentKind.PERSONALITY_PROFILE, agent.personality),
        PromptComponent(ComponentKind.OPINION_VALUE, _opinion_phrase(opinion)),
        PromptComponent(ComponentKind.INTERACTION_HISTORY, _history_summary(agent)),
        PromptComponent(
            ComponentKind.TOPIC_DESCRIPTION,
            f"The topic is {topic.name}, {topic.description}.",
        ),
    )
    system_text = (
        "You rate the stance of social-media messages on a scale from -1.0 "
        "(strongly against) to 1.0 (strongly in favor), as perceived by the "
        "reader described below.\n" + "\n".join(c.text for c in components) + "\n"
        "Reply with a single decimal number and nothing else.\n"
        'Example: "UBI would finally give families breathing room." -> 0.8\n'
        'Example: "Handing out money for nothing will wreck the budget." -> -0.8'
    )
    user_text = f'Rate this message: "{message.text}"'
    return PromptBundle(system_text=system_text, user_text=user_text, components=components)


_DECIMAL_RE = re.compile(r"-?\d+(?:\.\d+)?|-?\.\d+")


def parse_assessment(completion: str) -> float:
    """First decimal token of the completion, clamped to [-1, 1]."""
    m = _DECIMAL_RE.search(completion)
    if m is None:
        raise UnparsableAssessment(f"no decimal in completion: {completion!r}")
    return clamp_opinion(float(m.group(0)))


# ---------------------------------------------------------------------------
# Stub template banks: (sign, tier, kind) -> variants. {kw} is a lexicon
# keyword of the matching sign, {topic} the topic name, {parent} the parent
# author's id for replies.

_POST_TEMPLATES = {
    ("pro", IntensityTier.LOW): (
        "Still weighing the case for {topic}. The {kw} argument looks promising, but I'd want stronger evidence before committing.",
        "I lean slightly toward {topic}, mostly for the {kw} upside, though I can see reasonable objections too.",
        "If the pilot programs hold up, {topic} might actually improve {kw}. Might. Happy to be corrected.",
    ),
    ("pro", IntensityTier.MODERATE): (
        "The more I read about {topic}, the more the {kw} case convinces me. Critics keep talking past it.",
        "We already pay dearly for the status quo. {topic} is a serious answer to the {kw} problem and deserves a real trial.",
        "Most objections to {topic} collapse once you look at {kw}. Our side has done the homework.",
    ),
    ("pro", IntensityTier.HIGH): (
        "Anyone still blocking {topic} is defending a machine that grinds people down. We demand {kw} NOW, no more excuses!",
        "{topic} is the fight of our generation. They will not take {kw} away from us. Pick a side!",
        "Wake up! The opponents of {topic} profit from your misery. {kw} is our right and we WILL win it!",
    ),
    ("contra", IntensityTier.LOW): (
        "I'm not sold on {topic} yet. The {kw} concern seems real, though I admit the evidence cuts both ways.",
        "Leaning against {topic} for now, mainly over {kw}, but I'd genuinely like to see data that proves me wrong.",
        "Maybe {topic} could work somewhere, but the {kw} question feels unresolved to me.",
    ),
    ("contra", IntensityTier.MODERATE): (
        "Supporters of {topic} keep waving away the {kw} problem. Until they answer it, count me out.",
        "Every serious look at {topic} runs into {kw}. Our skepticism is earned, not reflexive.",
        "The {kw} numbers behind {topic} simply do not add up, whatever the advocates claim.",
    ),
    ("contra", IntensityTier.HIGH): (
        "{topic} is a wrecking ball aimed at everything we built. {kw} will bury us while they cheer. Fight it!",
        "The {topic} crowd is selling a fantasy that ends in {kw}. They are a threat to every working family!",
        "Say NO to {topic}! It means {kw}, dependency, and ruin, and its pushers know it!",
    ),
}

_REPLY_TEMPLATES = {
    ("agree", IntensityTier.LOW): (
        "Fair point from user {parent}. I'd cautiously add that {kw} matters here too, if the numbers hold.",
        "I think user {parent} is onto something, though I'd frame the {kw} part more carefully.",
    ),
    ("agree", IntensityTier.MODERATE): (
        "Exactly what user {parent} said. The {kw} point is the one the other side never answers.",
        "User {parent} puts it well. Add {kw} to the ledger and the conclusion writes itself.",
    ),
    ("agree", IntensityTier.HIGH): (
        "THIS. User {parent} says what we are all thinking. It has always been about {kw}, and they know it!",
        "User {parent} nails it. Anyone who denies the {kw} reality is not arguing in good faith. Stand firm!",
    ),
    ("disagree", IntensityTier.LOW): (
        "I see it differently than user {parent}: the {kw} aspect seems more uncertain than that, though I may be missing something.",
        "Respectfully pushing back on user {parent}. Doesn't the {kw} question cut the other way?",
    ),
    ("disagree", IntensityTier.MODERATE): (
        "User {parent} skips right past {kw}. That is the weak link in this whole argument.",
        "No, user {parent}, the {kw} issue doesn't vanish because it is inconvenient. Address it.",
    ),
    ("disagree", IntensityTier.HIGH): (
        "User {parent} is spreading exactly the nonsense that got us here. {kw} is the reality and your side owns it!",
        "Absolutely not, user {parent}. People like you ignore {kw} until it is too late. We will not be lectured by you!",
    ),
}

_REPOST_PREFIX = {
    IntensityTier.LOW: (
        "Worth a read, with caveats about {kw}:",
        "Sharing for discussion; the {kw} angle deserves thought:",
    ),
    IntensityTier.MODERATE: (
        "This {kw} point needs more eyes:",
        "Boosting this; the {kw} argument is exactly right:",
    ),
    IntensityTier.HIGH: (
        "EVERYONE needs to see this. {kw}!",
        "Spread this far and wide. {kw} is on the line!",
    ),
}

_PERSONA_ADJECTIVES = ("thoughtful", "passionate", "analytical", "pragmatic", "curious", "blunt")
_PERSONA_STYLES = (
    "cites studies and statistics",
    "asks pointed questions",
    "argues from personal experience",
    "reasons from first principles",
    "writes long threads with sources",
    "keeps replies short and sharp",
)
_USERNAME_FIRST = (
    "quiet", "tired", "urban", "northern", "honest", "late", "koffee",
    "prairie", "salty", "patient", "restless", "digital",
)
_USERNAME_SECOND = (
    "economist", "barista", "teacher", "skeptic", "optimist", "nurse",
    "coder", "farmer", "student", "librarian", "veteran", "parent",
)
_BIO_HOOKS = (
    "Three jobs in ten years and opinions to show for it.",
    "Reads the footnotes so you don't have to.",
    "Believes charts settle arguments.",
    "Here for the policy, stays for the drama.",
    "Small town, big spreadsheet.",
    "Retweets are absolutely endorsements.",
)


# ---------------------------------------------------------------------------


class _LiveClient:
    """Minimal chat-completion client with bounded retries and backoff."""

    def __init__(self, mode: LiveMode, transport: Optional[httpx.BaseTransport] = None):
        api_key = os.environ.get(mode.api_key_env_var, "")
        if not api_key:
            raise MissingApiKey(
                f"live mode requires the {mode.api_key_env_var} environment variable"
            )
        self._mode = mode
        self._client = httpx.Client(
            timeout=mode.timeout,
            transport=transport,
            headers={"Authorization": f"Bearer {api_key}"},
        )
        self.calls = 0

    def complete(self, system_text: str, user_text: str) -> str:
        body = {
            "model": self._mode.model_name,
            "messages": [
                {"role": "system", "content": system_text},
                {"role": "user", "content": user_text},
            ],
        }
        last_error: Optional[Exception] = None
        for attempt in range(self._mode.max_retries + 1):
            if attempt > 0 and self._mode.backoff_base > 0:
                time.sleep(self._mode.backoff_base * 2 ** (attempt - 1))
            self.calls += 1
            try:
                resp = self._client.post(self._mode.endpoint_url, json=body)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if resp.status_code >= 500:
                last_error = RemoteUnavailable(f"server returned {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise RemoteUnavailable(f"request rejected with {resp.status_code}")
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise RemoteUnavailable(f"malformed completion payload: {exc}") from exc
            return content
        raise RemoteUnavailable(f"gave up after {self._mode.max_retries + 1} attempts: {last_error}")

    def close(self) -> None:
        self._client.close()


class Gateway:
    """Run-scoped content generator and assessor.

    Use one instance per run: it owns the live response cache, the request
    budget, and the set of usernames already issued (collisions gain a
    numeric suffix). Stub-mode methods draw only from the caller's Rng, so
    determinism is inherited from the run stream.
    """

    def __init__(
        self,
        config: GatewayConfig = GatewayConfig(),
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.config = config
        self._cache: dict[str, str] = {}
        self._remote_calls = 0
        self._usernames: set[str] = set()
        if isinstance(config.mode, LiveMode):
            self._live: Optional[_LiveClient] = _LiveClient(config.mode, transport)
            self._pro, self._contra = DEFAULT_LEXICON_PRO, DEFAULT_LEXICON_CONTRA
        else:
            self._live = None
            if config.mode.lexicon_path:
                self._pro, self._contra = load_lexicon(config.mode.lexicon_path)
            else:
                self._pro, self._contra = DEFAULT_LEXICON_PRO, DEFAULT_LEXICON_CONTRA

    @property
    def is_stub(self) -> bool:
        return self._live is None

    @property
    def remote_calls(self) -> int:
        return self._remote_calls

    def close(self) -> None:
        if self._live is not None:
            self._live.close()

    # -- live plumbing ------------------------------------------------------

    def _complete(self, bundle: PromptBundle) -> str:
        key = hashlib.sha256(
            (bundle.system_text + "\x00" + bundle.user_text).encode("utf-8")
        ).hexdigest()
        if key in self._cache:
            return self._cache[key]
        budget = self.config.request_budget
        if budget is not None and self._remote_calls >= budget:
            raise BudgetExhausted(f"request budget of {budget} calls spent")
        self._remote_calls += 1
        content = self._live.complete(bundle.system_text, bundle.user_text)
        if not content or not content.strip():
            raise EmptyCompletion("remote returned an empty completion")
        self._cache[key] = content
        return content

    # -- generation ---------------------------------------------------------

    def generate_message(
        self,
        agent: Agent,
        topic: Topic,
        kind: MessageKind,
        reply_to: Optional[Message],
        rng: Rng,
    ) -> MessageDraft:
        bundle = assemble_prompt(agent, topic, kind, reply_to)
        opinion = agent.opinion if agent.opinion is not None else 0.0
        if self._live is not None:
            text = self._complete(bundle).strip()[:MAX_MESSAGE_CHARS]
            return MessageDraft(text=text, stance_meta=opinion)
        return self._stub_message(agent, topic, kind, reply_to, rng)

    def _stub_message(
        self,
        agent: Agent,
        topic: Topic,
        kind: MessageKind,
        reply_to: Optional[Message],
        rng: Rng,
    ) -> MessageDraft:
        opinion = agent.opinion if agent.opinion is not None else 0.0
        sign = "pro" if stance_sign(opinion) > 0 else "contra"
        tier = intensity_tier(opinion)
        keywords = self._pro if sign == "pro" else self._contra
        kw = rng.pick(keywords)
        if kind is MessageKind.POST:
            template = rng.pick(_POST_TEMPLATES[(sign, tier)])
            text = template.format(topic=topic.name, kw=kw)
        elif kind is MessageKind.COMMENT:
            parent_stance = reply_to.stance_meta if reply_to.stance_meta is not None else 0.0
            mode = "agree" if stance_sign(opinion) == stance_sign(parent_stance) else "disagree"
            template = rng.pick(_REPLY_TEMPLATES[(mode, tier)])
            text = template.format(parent=reply_to.author_id, kw=kw)
        else:
            prefix = rng.pick(_REPOST_PREFIX[tier]).format(kw=kw)
            text = f"{prefix} \"{reply_to.text}\""
        tag = f"{sign}-{tier.value}-{kind.value}"
        return MessageDraft(text=text[:MAX_MESSAGE_CHARS], stance_meta=opinion, template_tag=tag)

    def generate_persona(self, opinion: float, rng: Rng) -> Persona:
        if self._live is not None:
            bundle = PromptBundle(
                system_text=(
                    "Invent a social-media persona consistent with holding the "
                    f"opinion {opinion:+.2f} (scale -1 to 1) on the configured "
                    "topic. Answer with three lines: username, biography, "
                    "personality (one sentence, starting 'You are')."
                ),
                user_text="Generate the persona now.",
                components=(),
            )
            lines = [ln.strip() for ln in self._complete(bundle).splitlines() if ln.strip()]
            if len(lines) < 3:
                raise RemoteUnavailable(f"persona completion had {len(lines)} lines, need 3")
            username, biography, personality = lines[0], lines[1], lines[2]
        else:
            adjective = rng.pick(_PERSONA_ADJECTIVES)
            style = rng.pick(_PERSONA_STYLES)
            username = f"{rng.pick(_USERNAME_FIRST)}_{rng.pick(_USERNAME_SECOND)}"
            biography = rng.pick(_BIO_HOOKS)
            personality = f"You are a {adjective} person who tends to {style}."
        username = self._dedupe_username(username)
        if not (username and biography and personality):
            raise RemoteUnavailable("persona fields must be non-empty")
        return Persona(personality=personality, biography=biography, username=username)

    def _dedupe_username(self, username: str) -> str:
        candidate = username
        suffix = 2
        while candidate in self._usernames:
            candidate = f"{username}{suffix}"
            suffix += 1
        self._usernames.add(candidate)
        return candidate

    # -- assessment ---------------------------------------------------------

    def assess_opinion(self, agent: Agent, message: Message, topic: Topic, rng: Rng) -> float:
        """Perceived stance of a message on [-1, 1].

        Stub mode privileges the message's internal stance tag (plus optional
        Gaussian noise) so that engine-level Monte-Carlo checks are exact;
        messages without a tag (human-authored) fall back to lexicon polarity.
        """
        if not message.text:
            raise GatewayError("cannot assess an empty message")
        if self._live is not None:
            bundle = build_assessment_prompt(agent, message, topic)
            return parse_assessment(self._complete(bundle))
        mode = self.config.mode
        if message.stance_meta is not None:
            value = message.stance_meta
            if mode.noise_sigma > 0:
                value += rng.normal(0.0, mode.noise_sigma)
            return clamp_opinion(value)
        return self._lexicon_polarity(message.text)

    def _lexicon_polarity(self, text: str) -> float:
        lowered = text.lower()
        pro_hits = sum(lowered.count(kw) for kw in self._pro)
        contra_hits = sum(lowered.count(kw) for kw in self._contra)
        return (pro_hits - contra_hits) / max(1, pro_hits + contra_hits)
