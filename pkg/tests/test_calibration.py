import json

import pytest

from bsphases.calibration import FROZEN, PAPER_EXAMPLE_MASLOV, Calibration, resolve, run_calibration, write_table
from bsphases.errors import ConfigError
from bsphases.graph import build_graph
from bsphases.model import builtin_family


@pytest.mark.slow
def test_calibration_selects_frozen_constants(tmp_path):
    res = run_calibration()
    sel = res["selected"]
    assert sel == {"counter_sign": FROZEN.counter_sign, "leg_maslov_half": FROZEN.leg_maslov_half}
    errs = sorted(c["sup_err"] for c in res["candidates"])
    # the winner is well separated from the runner-up
    assert errs[0] < 0.2 * errs[1]
    path = tmp_path / "cal.json"
    write_table(res, path)
    assert json.loads(path.read_text())["selected"] == sel


def test_paper_example_maslov_matches_frozen():
    g = build_graph(builtin_family("paper_example"), [0.1])
    assert g.cycles[0].maslov == PAPER_EXAMPLE_MASLOV


def test_from_mapping():
    assert Calibration.from_mapping({"counter_sign": -1, "leg_maslov_half": 0.5}) == Calibration(-1, 0.5)
    assert resolve(None) is FROZEN
    with pytest.raises(ConfigError):
        Calibration.from_mapping({"counter_sign": 1})
    with pytest.raises(ConfigError):
        Calibration(2, 0.5)
    with pytest.raises(ConfigError):
        Calibration(1, 1.0)
