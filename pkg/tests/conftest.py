import copy

import pytest

from polysim.config import config_from_dict
from polysim.garden import LifecycleStage, new_garden

KALE = {"name": "kale", "germination_time": 5, "maturation_time": 38, "max_radius": 28,
        "water_group": "Group1", "reproductive_duration": 10, "senescence_duration": 15}
LETTUCE = {"name": "lettuce", "germination_time": 8, "maturation_time": 45, "max_radius": 17,
           "water_group": "Group2"}


def make_config(placements=(), types=(KALE, LETTUCE), **extra):
    data = {
        "bed": {"width": 150, "height": 150},
        "plant_types": [copy.deepcopy(t) for t in types],
        "placements": [{"type": t, "x": x, "y": y} for t, x, y in placements],
        "cycle_length": 100,
        "window": [20, 70],
        "seed": 0,
    }
    data.update(extra)
    return config_from_dict(data)


def make_state(placements=(), **kw):
    return new_garden(make_config(placements, **kw))


def set_stage(plant, stage, radius=None):
    plant.planted = True
    plant.stage = stage
    if stage != LifecycleStage.GERMINATION:
        plant.germinated = True
        plant.emerged_day = plant.emerged_day if plant.emerged_day is not None else 0
    if radius is not None:
        plant.radius = radius


@pytest.fixture
def kale_config():
    return make_config([("kale", 20, 15)])


# --- acceptance reporting -----------------------------------------------------

_criteria = {}
_outcomes = {}
_details = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _criteria[item.nodeid] = mark.args


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria:
        return
    if report.failed or (report.when == "call" and report.passed):
        ok = _outcomes.get(report.nodeid, True) and report.passed
        _outcomes[report.nodeid] = ok
        for key, value in report.user_properties:
            if key == "detail":
                _details.setdefault(_criteria[report.nodeid][0], []).append(value)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    grouped = {}
    for nodeid, (number, title) in _criteria.items():
        if nodeid in _outcomes:
            ok, _ = grouped.get(number, (True, title))
            grouped[number] = (ok and _outcomes[nodeid], title)
    terminalreporter.section("acceptance criteria")
    for number in sorted(grouped):
        ok, title = grouped[number]
        detail = "; ".join(_details.get(number, []))
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
