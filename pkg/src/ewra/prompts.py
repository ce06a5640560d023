"""One-shot prompt templates for the three tasks, in explicit and implicit
variants.

The explicit variant carries a category-definitions block; the implicit
variant is byte-identical except that block is absent. Templates are fixed
text with a single ``<sentence>`` placeholder.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .core import EwraError, TaskKind

PLACEHOLDER = "<sentence>"


class TemplateError(EwraError):
    """Raised when a template violates the placeholder contract."""


class PromptVariant(Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


@dataclass(frozen=True)
class PromptTemplate:
    """Ordered prompt sections; ``definitions`` is None for implicit
    variants."""

    task: TaskKind
    variant: PromptVariant
    task_description: str
    definitions: Optional[str]
    one_shot_example: str
    format_instructions: str = ""

    def sections(self) -> list[str]:
        parts = [self.task_description]
        if self.definitions is not None:
            parts.append(self.definitions)
        parts.append(self.one_shot_example)
        if self.format_instructions:
            parts.append(self.format_instructions)
        return parts

    def render(self, sentence: str) -> str:
        """Substitute the placeholder (exactly once, single pass) and join
        sections with blank lines."""
        text = "\n\n".join(self.sections())
        if text.count(PLACEHOLDER) != 1:
            raise TemplateError(
                f"template for {self.task.value}/{self.variant.value} must "
                f"contain exactly one {PLACEHOLDER!r} placeholder"
            )
        return text.replace(PLACEHOLDER, sentence)


_VIE_TASK_DESCRIPTION = (
    "[Task Description:]\n"
    'Given the sentence: "<sentence>", determine which categories it belongs '
    "to based on the definitions below. Assign a probability score between 0 "
    "and 1 to each category (strictly numeric values only), reflecting "
    "confidence that the sentence fits each label. Ensure the final "
    "probability for all the categories sum is exactly 1."
)

_VIE_DEFINITIONS = (
    "[Definitions of Categories]\n"
    "Vulnerability: Describes conditions that make people or places prone to harm, including:\n"
    "- Forecasts or warnings for specific locations about hazardous conditions (e.g., storm alerts, flood watches).\n"
    "- Excludes: General weather forecasts without warnings, past rainfall amounts, or climate trends without immediate hazard warnings.\n"
    "- Special case: Mentions of inches of rain count only if linked to a forecast predicting danger.\n"
    "\n"
    "Impact: Describes strictly measurable consequences of extreme weather, such as:\n"
    "- Number of casualties, injuries, financial loss, infrastructure damage, or economic impact.\n"
    "- Excludes: Mentions of states of emergency, inches of rain, road closures, tree falling, or event cancellations without quantifiable impact or flight delays.\n"
    "- Special case: Casualties always count as Impact, even if estimates (e.g., 'dozens injured').\n"
    "\n"
    "Emergency: Describes urgent actions requiring immediate response, including:\n"
    "- Evacuations, rescues, emergency shelters, or disaster response efforts.\n"
    "- Excludes: State of emergency declarations without mention of direct emergency actions.\n"
    "\n"
    "Others:\n"
    "- Sentences about extreme weather without clear Vulnerability, Impact, or Emergency markers.\n"
    "- Sentences mentioning multiple events without enough detail to fit a single category.\n"
    "- States of emergency, road closures, or school closures without measurable damage or emergency actions."
)

_VIE_ONE_SHOT = (
    "[Example:]\n"
    "Input: Krakow is struggling after heavy rainfall, with city officials offering sandbags to protect homes.\n"
    "<think>\n"
    "Explanation:\n"
    "1. Vulnerability: Krakow is struggling after heavy rainfall, indicating the city's "
    "vulnerability to flooding. The mention of heavy rainfall implies a risk, suggesting "
    "that Krakow is susceptible to potential harm due to the weather conditions. This fits "
    "the Vulnerability category as it shows the city’s increased risk of flooding.\n"
    "2. Impact: While the sentence mentions city officials offering sandbags to protect "
    "homes, there is no specific mention of measurable impacts such as casualties, "
    "injuries, financial loss, or infrastructure damage. Therefore, this category is less "
    "relevant compared to Vulnerability and Emergency.\n"
    "3. Emergency: The fact that city officials are offering sandbags to protect homes "
    "implies an urgent response to a disaster, categorizing the action as an emergency. "
    "The immediate need for protective measures points to an emergency situation.\n"
    "4. Others: This sentence describes a specific event related to heavy rainfall, but it "
    "is clearly categorized into Vulnerability, Impact, and Emergency. Therefore, it "
    'doesn\'t fit into the "Others" category as it clearly involves measurable '
    "consequences and urgent actions.\n"
    "</think>\n"
    "<output>\n"
    "Final Output:\n"
    "- Vulnerability: 0.40\n"
    "- Impact: 0.10\n"
    "- Emergency: 0.50\n"
    "- Others: 0.00\n"
    "</output>"
)

_EMOTION_TASK_DESCRIPTION = (
    "[Task Description:]\n"
    'Given the sentence: "<sentence>", determine which emotions it conveys. '
    "Assign probability scores ensuring they sum to exactly 1."
)

_EMOTION_DEFINITIONS = (
    "[Emotion Definitions]\n"
    "Sadness: Expresses sorrow, grief, disappointment, or loss, often involving suffering or destruction.\n"
    "Anger: Indicates frustration, outrage, or dissatisfaction, including expressions of blame or criticism.\n"
    "Fear: Suggests concern, anxiety, or perceived threat, often linked to warnings or potential dangers.\n"
    "Joy: Reflects happiness, relief, celebration, or positive outcomes.\n"
    "Optimism: Shows hope, encouragement, or confidence in a positive future.\n"
    "Trust: Indicates reliability, assurance, or faith in a person, system, or institution.\n"
    "Neutral: Lacks strong emotional cues, purely factual, informational or descriptive."
)

_EMOTION_ONE_SHOT = (
    "[Example:]\n"
    'Input: "The wildfire destroyed thousands of homes, leaving families devastated."\n'
    "<think>\n"
    "Explanation:\n"
    "- The sentence describes destruction and suffering, strongly aligning with Sadness (0.8).\n"
    "- There is minor frustration in the situation, leading to Anger (0.05).\n"
    "- The threat aspect contributes to Fear (0.05).\n"
    "- It lacks positive emotion, optimism, or trust.\n"
    "- Since the sentence is descriptive but emotionally charged, Neutral (0.1) remains minimal.\n"
    "</think>\n"
    "<output>\n"
    "Final Output:\n"
    "- Sadness: 0.8\n"
    "- Anger: 0.05\n"
    "- Fear: 0.05\n"
    "- Joy: 0\n"
    "- Optimism: 0\n"
    "- Trust: 0\n"
    "- Neutral: 0.1\n"
    "</output>"
)

_TOPIC_TASK_DESCRIPTION = (
    "[Task Description:]\n"
    'Given the sentence: "<sentence>", determine the most relevant topic, '
    "subtopic, and keywords based on the definitions below. Assign a "
    "probability score between 0 and 1 to each possible category under Topic "
    "and Subtopic (strictly numeric values only), ensuring the final "
    "probability sum is exactly 1"
)

_TOPIC_DEFINITIONS = (
    "[Topic and Subtopic Definitions]\n"
    "Vulnerabilities: Identifies risk factors that make communities more susceptible to damage.\n"
    "- Environmental Vulnerability: Fragile ecosystems that increase disaster impact.\n"
    "- Infrastructure Vulnerability: Structural weaknesses leading to heightened risk.\n"
    "- Economic Vulnerability: Financial instability due to disasters.\n"
    "\n"
    "Impact: Direct effects of extreme weather.\n"
    "- Deaths: Fatalities resulting from disasters.\n"
    "- Infrastructure Damage: Physical destruction of buildings and roads.\n"
    "- Economic Damage: Financial loss due to extreme weather.\n"
    "- Homeless: Displacement due to destruction.\n"
    "\n"
    "Emergency Response: Immediate actions taken to mitigate disasters.\n"
    "- Evacuation: Organized movement of people to safety.\n"
    "- Community Support: Aid provided by local and national organizations.\n"
    "- Emergency Services: Rescue and medical response efforts.\n"
    "- Communication Strategies: Plans for disseminating critical information."
)

_TOPIC_ONE_SHOT = (
    "[Example:]\n"
    'Input: "Hurricane Maria devastated Puerto Rico, leaving thousands homeless and without power."\n'
    "<think>\n"
    "Explanation:\n"
    "- The sentence describes significant destruction, categorizing it under Impact (0.8).\n"
    '- "Leaving thousands homeless" aligns with Homeless (0.5), and "without power" suggests Infrastructure Damage (0.3).\n'
    "- Emergency efforts likely followed, so Emergency Response (0.2) is relevant, particularly Emergency Services (0.2).\n"
    "</think>\n"
    "<output>\n"
    "Final Output:\n"
    "- Topic: Impact (0.8), Emergency Response (0.2)\n"
    "- Sub-Topic: Homeless (0.5), Infrastructure Damage (0.3), Emergency Services (0.2)\n"
    "- Keywords: devastation, homeless, power outage, Hurricane Maria\n"
    "</output>"
)

_TOPIC_FORMAT_INSTRUCTIONS = "- Keywords should not include specific locations."

_SECTIONS = {
    TaskKind.VIE: (_VIE_TASK_DESCRIPTION, _VIE_DEFINITIONS, _VIE_ONE_SHOT, ""),
    TaskKind.EMOTION: (
        _EMOTION_TASK_DESCRIPTION,
        _EMOTION_DEFINITIONS,
        _EMOTION_ONE_SHOT,
        "",
    ),
    TaskKind.TOPIC_LABEL: (
        _TOPIC_TASK_DESCRIPTION,
        _TOPIC_DEFINITIONS,
        _TOPIC_ONE_SHOT,
        _TOPIC_FORMAT_INSTRUCTIONS,
    ),
}


def default_template(task: TaskKind, variant: PromptVariant) -> PromptTemplate:
    description, definitions, one_shot, format_instructions = _SECTIONS[task]
    return PromptTemplate(
        task=task,
        variant=variant,
        task_description=description,
        definitions=definitions if variant is PromptVariant.EXPLICIT else None,
        one_shot_example=one_shot,
        format_instructions=format_instructions,
    )


def render_prompt(task: TaskKind, variant: PromptVariant, sentence: str) -> str:
    """Render the default template for (task, variant) around a sentence."""
    return default_template(task, variant).render(sentence)
