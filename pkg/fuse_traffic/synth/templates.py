"""Шаблоны текстов синтетических событий по типу и классу влияния"""

from typing import Dict, Tuple

# {place}: ориентир у сенсора. Запятых в текстах нет, ответ провайдера делится по ним
EVENT_TEXT_TEMPLATES: Dict[Tuple[str, str], str] = {
    ("accident", "none"): "Disabled vehicle reported on the shoulder near {place} with lanes open",
    ("accident", "minor"): "Minor fender bender near {place} slowing the right lane",
    ("accident", "moderate"): "Collision blocking two lanes near {place} with tow trucks en route",
    ("accident", "high"): "Multi-vehicle crash closes all lanes near {place} with a sigalert issued",
    ("concert", "none"): "Small acoustic set at a cafe near {place}",
    ("concert", "minor"): "Classic Cinema Night at a theater near {place}",
    ("concert", "moderate"): "Wilco concert at The Wiltern near {place} starting",
    ("concert", "high"): "LA Lakers Game at Staples Center near {place} in a sold out arena",
    ("weather", "none"): "Clear skies and light breeze around {place}",
    ("weather", "minor"): "Light drizzle and wet pavement around {place}",
    ("weather", "moderate"): "Heavy rain with reduced visibility around {place}",
    ("weather", "high"): "Severe storm flooding underpasses around {place} and closes roads",
    ("crime", "none"): "Routine patrol activity near {place}",
    ("crime", "minor"): "Police activity on a side street near {place}",
    ("crime", "moderate"): "Police investigation closes a ramp near {place}",
    ("crime", "high"): "Armed standoff shuts down the freeway near {place} behind a police perimeter",
}

PLACE_NAMES = (
    "Figueroa St",
    "Olympic Blvd",
    "Hill St",
    "Grand Ave",
    "Wilshire Blvd",
    "Alameda St",
    "Spring St",
    "Main St",
    "Broadway",
    "Flower St",
    "Hope St",
    "Temple St",
    "Sunset Blvd",
    "Vermont Ave",
    "Western Ave",
    "Pico Blvd",
    "Venice Blvd",
    "Santa Monica Blvd",
    "Beverly Blvd",
    "Melrose Ave",
)


def place_name(node: int) -> str:
    base = PLACE_NAMES[node % len(PLACE_NAMES)]
    cycle = node // len(PLACE_NAMES)
    return base if cycle == 0 else f"{base} exit {cycle}"


def render_event_text(category: str, impact: str, node: int) -> str:
    return EVENT_TEXT_TEMPLATES[(category, impact)].format(place=place_name(node))
