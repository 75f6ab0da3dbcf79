# -*- coding: utf-8 -*-
import io
import json

import pandas as pd
import pytest

from backend.app.core.errors import PreconditionError
from backend.app.connectors.storage.height_field_io import (
    format_height_field,
    parse_height_field,
    read_height_field,
    region_for_shape,
    write_height_field,
)
from backend.app.connectors.storage.report_writer import (
    CONFIG_PREFIX,
    read_output_config,
    read_table,
    write_json,
    write_table,
)
from backend.app.domain.schemas.experiment import ExperimentConfig
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import RegionKind, Site, box
from backend.app.services.lattice.height_field import HeightConfig


@pytest.fixture
def config():
    return ExperimentConfig(command="enumerate", parameters={"beta": 1.0, "L": "1"}, defaults_applied=["window"])


# ==================== CAMPOS DE ALTURA ====================


def test_height_field_text_layout():
    region = box(1)
    field = HeightConfig.from_mapping(region, BoundaryCondition.zero(region), {(0, 0): 1, (-1, 1): 2})
    assert format_height_field(field) == "3 3 0\n2 0 0\n0 1 0\n0 0 0\n"


def test_height_field_round_trip_with_offset(tmp_path):
    region = box(1)
    field = HeightConfig.from_mapping(region, BoundaryCondition.zero(region), {(1, -1): 7, (0, 0): 5})
    path = tmp_path / "field.txt"
    write_height_field(field, path, hoff=5)
    assert path.read_text().splitlines()[0] == "3 3 5"
    assert read_height_field(path) == field


def test_parse_from_stream_with_custom_boundary():
    text = "1 1 0\n2\n"
    field = read_height_field(io.StringIO(text), bc_factory=lambda r: BoundaryCondition.constant(r, 2))
    assert field.height((0, 0)) == 2
    assert field.bc.height((1, 0)) == 2


def test_even_shapes_are_anchored_at_the_origin():
    region = region_for_shape(2, 4)
    assert region.kind == RegionKind.CUSTOM
    assert (region.x1_min, region.x2_min) == (-1, -2)
    assert region.is_rectangle
    field = parse_height_field("2 4 0\n1 2\n3 4\n5 6\n7 8\n")
    assert field.height(Site(-1, 1)) == 1
    assert field.height(Site(0, -2)) == 8


@pytest.mark.parametrize("text", ["3 3\n0 0 0\n", "2 2 0\n1 2\n3\n", "1 1 0\nx\n"])
def test_malformed_height_fields(text):
    with pytest.raises(PreconditionError):
        parse_height_field(text)


def test_write_to_stream():
    region = box(0)
    buffer = io.StringIO()
    write_height_field(HeightConfig.flat(region, BoundaryCondition.zero(region), -3), buffer)
    assert buffer.getvalue() == "1 1 0\n-3\n"


# ==================== SALIDAS ====================


def test_csv_output_embeds_config(tmp_path, config):
    path = tmp_path / "out" / "table.csv"
    write_table(pd.DataFrame({"L": [1, 2], "value": [0.1, 1 / 3]}), path, config)
    first = path.read_text().splitlines()[0]
    assert first.startswith(CONFIG_PREFIX)
    assert read_output_config(path) == config.echo()
    frame = read_table(path)
    assert list(frame.columns) == ["L", "value"]
    assert frame["value"].iloc[1] == 1 / 3


def test_json_output_embeds_config(tmp_path, config):
    path = tmp_path / "result.json"
    write_json({"log_z": 0.0}, path, config)
    payload = json.loads(path.read_text())
    assert payload["result"] == {"log_z": 0.0}
    assert payload["config"]["defaults_applied"] == ["window"]
    assert read_output_config(path) == config.echo()
    assert not list(tmp_path.glob(".result.json.*"))


def test_stdout_when_no_path(capsys, config):
    write_json({"ok": True}, None, config)
    assert json.loads(capsys.readouterr().out)["result"] == {"ok": True}
