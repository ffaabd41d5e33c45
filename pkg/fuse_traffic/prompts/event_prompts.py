from typing import Dict

EXAMPLE_SENTENCE = "Example: Classic Cinema Night at Cinegrill Theater."

PROMPT_HEADER = """You are an assistant that supplies event context to a traffic forecasting system.
Sensor location: latitude {lat}, longitude {lon}.
Current time: {timestamp}.
Prediction window: {window}.
"""

PROMPT_FOOTER = """Answer with JSON only, in the form {"Event": "<comma-separated event descriptions>", "Impact": "<No Impact|Minor Impact|Moderate Impact|High Impact>"}.
If nothing relevant is expected, answer {"Event": ""}.
"""

FULL_FEATURE_TASK = (
    "For this sensor, identify nearby events that could impact traffic "
    "(e.g., local news, severe weather, concerts, crime). " + EXAMPLE_SENTENCE
)

SINGLE_EVENT_TASK = (
    "For this sensor, identify the single most influential event that could impact traffic "
    "(e.g., local news, severe weather, concerts, crime). " + EXAMPLE_SENTENCE
)

NO_WEATHER_TASK = (
    "For this sensor, identify nearby events that could impact traffic "
    "(e.g., local news, concerts, crime). " + EXAMPLE_SENTENCE
)

NO_CRIME_TASK = (
    "For this sensor, identify nearby events that could impact traffic "
    "(e.g., local news, severe weather, concerts). " + EXAMPLE_SENTENCE
)

ZERO_SHOT_TASK = (
    "For this sensor, identify nearby events that could impact traffic "
    "(e.g., local news, severe weather, concerts, crime)."
)


def _body(task: str) -> str:
    return PROMPT_HEADER + task + "\n" + PROMPT_FOOTER


EVENT_PROMPTS: Dict[str, str] = {
    "P1": _body(FULL_FEATURE_TASK),
    "P2": _body(SINGLE_EVENT_TASK),
    "P3": _body(NO_WEATHER_TASK),
    "P4": _body(NO_CRIME_TASK),
    "P5": _body(ZERO_SHOT_TASK),
}

EVENT_SYSTEM_PROMPT = (
    "You retrieve real-world events that may affect road traffic. "
    "Always respond with a single JSON object and nothing else."
)
