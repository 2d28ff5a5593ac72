import numpy as np
import pandas as pd
import pytest
from models.states import CouplingVariant
from tools.csv_tools import parse_csv, read_csv, render_csv, write_csv


@pytest.fixture
def frame():
    return pd.DataFrame({
        "t": [0.0, 0.1, 1 / 3, 1e-300],
        "x": [-2.5e17, 0.30000000000000004, 2.0 ** -40, 123456.789],
        "event": ["", "", "", "escape"],
    })


def test_floats_survive_the_text_form(frame):
    parsed, _ = parse_csv(render_csv(frame))
    assert list(parsed.columns) == ["t", "x", "event"]
    assert np.array_equal(parsed["t"].to_numpy(), frame["t"].to_numpy())
    assert np.array_equal(parsed["x"].to_numpy(), frame["x"].to_numpy())
    assert list(parsed["event"]) == ["", "", "", "escape"]


def test_meta_lines_are_sorted_and_flattened(frame):
    meta = {
        "version": "0.1.0",
        "command": "simulate",
        "settings": {"x0": 0.1, "mode": CouplingVariant.FULL, "gamma": None},
    }
    text = render_csv(frame, meta)
    lines = text.split("\n")
    assert lines[:5] == [
        "# meta command = simulate",
        "# meta settings.gamma = ",
        "# meta settings.mode = full",
        "# meta settings.x0 = 0.10000000000000001",
        "# meta version = 0.1.0",
    ]
    assert lines[5] == "t,x,event"

    _, parsed_meta = parse_csv(text)
    assert parsed_meta["settings.x0"] == "0.10000000000000001"
    assert parsed_meta["settings.gamma"] == ""


def test_line_endings_are_lf(frame):
    text = render_csv(frame, {"command": "potential"})
    assert "\r" not in text
    assert text.endswith("\n")


def test_write_and_read(tmp_path, frame):
    path = tmp_path / "out.csv"
    text = write_csv(frame, str(path), {"command": "potential"})
    assert path.read_bytes() == text.encode("utf-8")

    loaded, meta = read_csv(str(path))
    assert meta == {"command": "potential"}
    assert np.array_equal(loaded["x"].to_numpy(), frame["x"].to_numpy())


def test_read_missing_file(tmp_path):
    with pytest.raises(OSError):
        read_csv(str(tmp_path / "missing.csv"))
