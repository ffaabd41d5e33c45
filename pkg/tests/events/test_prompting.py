from pathlib import Path

import pytest

from fuse_traffic.core.errors import TemplateError
from fuse_traffic.prompts.event_prompts import EXAMPLE_SENTENCE
from fuse_traffic.schemas.events import PromptTemplate, Sensor
from fuse_traffic.services.prompting import fill_placeholders, render_prompt

GOLDEN_DIR = Path(__file__).parent / "golden"
DOWNTOWN_LA = Sensor(id=0, lat=34.0522, lon=-118.2437)


@pytest.mark.parametrize("template_id", ["P1", "P2", "P3", "P4", "P5"])
def test_prompt_matches_golden_file(template_id, la_time):
    rendered = render_prompt(template_id, DOWNTOWN_LA, la_time, 12, 12)
    expected = (GOLDEN_DIR / f"{template_id}.txt").read_bytes()
    assert rendered.encode("utf-8") == expected


def test_p1_names_coordinates_and_evening_window(la_time):
    rendered = render_prompt("P1", DOWNTOWN_LA, la_time, 12, 12)
    assert "34.0522" in rendered and "-118.2437" in rendered
    assert "2012-03-02 17:45 to 2012-03-02 18:40" in rendered


def test_zero_shot_differs_only_by_example_sentence(la_time):
    p1 = render_prompt("P1", DOWNTOWN_LA, la_time, 12, 12)
    p5 = render_prompt("P5", DOWNTOWN_LA, la_time, 12, 12)
    assert p1.replace(" " + EXAMPLE_SENTENCE, "") == p5


def test_single_step_horizon_gives_single_interval(la_time):
    rendered = render_prompt("P3", DOWNTOWN_LA, la_time, 12, 1)
    assert "Prediction window: 2012-03-02 17:45.\n" in rendered
    assert " to " not in rendered.split("Prediction window:")[1].splitlines()[0]


def test_render_is_stable(la_time):
    a = render_prompt("P2", DOWNTOWN_LA, la_time, 6, 3)
    b = render_prompt("P2", DOWNTOWN_LA, la_time, 6, 3)
    assert a == b


def test_unknown_placeholder_is_a_template_error(la_time):
    template = PromptTemplate(id="P1", body="Near {lat}, {lon} at {venue}\n")
    with pytest.raises(TemplateError, match="venue"):
        render_prompt(template, DOWNTOWN_LA, la_time, 12, 12)


def test_json_braces_are_not_placeholders():
    assert fill_placeholders('{"Event": ""} {x}', {"x": "1"}) == '{"Event": ""} 1'


@pytest.mark.parametrize("h_in, h_out", [(0, 12), (12, 0)])
def test_window_lengths_must_be_positive(h_in, h_out, la_time):
    with pytest.raises(TemplateError):
        render_prompt("P1", DOWNTOWN_LA, la_time, h_in, h_out)
