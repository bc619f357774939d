import re
from typing import Dict, List

# Offline stand-in for a chat model: answers each pipeline prompt with fixed,
# valid content so runs can be exercised without network access.

CANNED_INSIGHTS = """1. Players should survive most of the fight instead of dying early.
2. Damage dealt to the boss should be shared across the team rather than carried by one player.
3. Players should take different roles: some absorb the boss's hits while others deal damage."""

_MODULES = (
    (
        "Players should survive most of the fight instead of dying early.",
        "survival",
        "mean(survive_time_p1, survive_time_p2, survive_time_p3, survive_time_p4) / max_episode_time",
    ),
    (
        "Damage dealt to the boss should be shared across the team rather than carried by one player.",
        "shared_damage",
        "1 - clamp(std(damage_dealt_p1, damage_dealt_p2, damage_dealt_p3, damage_dealt_p4)"
        " / (mean(damage_dealt_p1, damage_dealt_p2, damage_dealt_p3, damage_dealt_p4) + 1), 0, 1)",
    ),
    (
        "Players should take different roles: some absorb the boss's hits while others deal damage.",
        "role_split",
        "clamp(std(damage_taken_p1, damage_taken_p2, damage_taken_p3, damage_taken_p4)"
        " / (mean(damage_taken_p1, damage_taken_p2, damage_taken_p3, damage_taken_p4) + 1), 0, 1)",
    ),
)

_WEIGHT_SCHEDULE = ((0.4, 0.3, 0.3), (0.34, 0.33, 0.33))

_VIOLATIONS = re.compile(r"range_violations: (\d+)/(\d+)")


def canned_program(weights=_WEIGHT_SCHEDULE[0]) -> str:
    blocks = []
    for (insight, name, body), weight in zip(_MODULES, weights):
        blocks.append(f"# {insight}\nmodule {name} weight {weight}:\n  {body}")
    return "```\n" + "\n\n".join(blocks) + "\n```"


def canned_designer(conversation: List[Dict[str, str]]) -> str:
    """Answers insight, program, feedback and revision prompts deterministically."""
    prompt = conversation[-1]["content"]
    if "numbered list" in prompt:
        return CANNED_INSIGHTS
    if "Give a single feedback" in prompt:
        found = _VIOLATIONS.search(prompt)
        if found and int(found.group(1)) > 0:
            return (
                f"The total left the desired range on {found.group(1)} of {found.group(2)} rows; "
                "scale the module weights down so their sum is at most the upper bound."
            )
        return (
            "The totals stay within range, but survival dominates the other modules; "
            "balance the weights so every insight contributes equally."
        )
    if "Feedback:" in prompt:
        return canned_program(_WEIGHT_SCHEDULE[1])
    return canned_program()
