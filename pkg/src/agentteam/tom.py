"""Per-agent belief states: a self summary plus first-order beliefs about teammates."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .errors import UnknownAuthor

SUMMARY_CAP = 400

BELIEF_SYSTEM = "You maintain an agent's private notes on its own work and its teammates' mental states."


@dataclass(frozen=True)
class InferredBelief:
    summary: str
    last_updated_turn: int


@dataclass(frozen=True)
class BeliefState:
    agent_id: str
    self_summary: str = ""
    others: dict = field(default_factory=dict)
    updated_at_turn: int = -1

    def to_dict(self):
        return {
            "self_summary": self.self_summary,
            "others": {k: {"summary": v.summary, "last_updated_turn": v.last_updated_turn}
                       for k, v in sorted(self.others.items())},
            "updated_at_turn": self.updated_at_turn,
        }


def initial_belief_state(agent_id: str) -> BeliefState:
    return BeliefState(agent_id)


def _cap(text: str) -> str:
    text = text.strip()
    return text[:SUMMARY_CAP].rstrip() if len(text) > SUMMARY_CAP else text


def update_belief_state(gateway, prior: BeliefState, new_message, team: Sequence) -> BeliefState:
    """Fold one message into ``prior``.

    The owner's own messages replace the self summary; anyone else's replace
    the belief entry for that author. Nothing else changes.
    """
    by_id = {p.id: p for p in team}
    author = by_id.get(new_message.agent_id)
    if author is None:
        raise UnknownAuthor(f"{new_message.agent_id!r} is not on the team")
    owner = by_id.get(prior.agent_id)
    owner_name = owner.display_name if owner else prior.agent_id
    own = new_message.agent_id == prior.agent_id

    if own:
        previous = prior.self_summary or "(nothing yet)"
        ask = (f"Summarise, in at most {SUMMARY_CAP} characters, your own current understanding,"
               " recent actions and intentions.")
    else:
        entry = prior.others.get(author.id)
        previous = entry.summary if entry else "(nothing yet)"
        ask = (f"Summarise, in at most {SUMMARY_CAP} characters, what {author.display_name}"
               f" ({author.role_title}) currently believes, intends and knows.")
    prompt = (
        f"You are {owner_name}.\n"
        f"Previous note: {previous}\n\n"
        f"New message from {author.display_name} (turn {new_message.turn_index}):\n"
        f"{new_message.beliefs}\n{new_message.response}\n{new_message.future_work}\n\n{ask}"
    )
    summary = _cap(gateway.ask("update_beliefs", BELIEF_SYSTEM, prompt, temperature=0.0))

    if own:
        return replace(prior, self_summary=summary, updated_at_turn=new_message.turn_index)
    others = dict(prior.others)
    others[author.id] = InferredBelief(summary, new_message.turn_index)
    return replace(prior, others=others, updated_at_turn=new_message.turn_index)


def render_beliefs_block(state: BeliefState, team: Sequence, diagnostics: Optional[Counter] = None) -> str:
    """``About my work:`` then one ``About <name>:`` line per teammate, in team order."""
    lines = []
    if state.self_summary:
        lines.append(f"About my work: {state.self_summary}")
    order = [p for p in team if p.id != state.agent_id]
    known = {p.id for p in order}
    for profile in order:
        entry = state.others.get(profile.id)
        if entry and entry.summary:
            lines.append(f"About {profile.display_name}: {entry.summary}")
    stale = [k for k in state.others if k not in known]
    if stale and diagnostics is not None:
        diagnostics["beliefs_about_unknown_agents"] += len(stale)
    return "\n".join(lines)
