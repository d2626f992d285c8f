from pathlib import Path

import pytest
from pydantic import ValidationError

from conewave import config
from conewave.errors import ConfigError
from conewave.models import ResultTable

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def document(**extra):
    base = {"scenario": "strichartz_scaling", "cross_section": {"kind": "sphere", "n": 4}, "sweep": [1.0, 2.0]}
    base.update(extra)
    return base


def test_dyadic_sweep_shorthand():
    parsed = config.parse_config(document(sweep={"dyadic": [-1, 2]}))
    assert parsed.sweep == [0.5, 1.0, 2.0, 4.0]


@pytest.mark.parametrize("sweep", [
    [2.0, 1.0],
    [1.0, 1.0],
    [-1.0, 1.0],
    {"dyadic": [1]},
    {"linear": [1, 2]},
])
def test_bad_sweeps(sweep):
    with pytest.raises(ConfigError):
        config.parse_config(document(sweep=sweep))


def test_scenario_requirements():
    with pytest.raises(ConfigError):
        config.parse_config({"scenario": "kss", "sweep": [1.0]})
    with pytest.raises(ConfigError):
        config.parse_config(document(sweep=[]))
    assert config.parse_config(document(scenario="local_energy", sweep=[])).sweep == []
    assert config.parse_config({"scenario": "selftest"}).cross_section is None
    with pytest.raises(ConfigError):
        config.parse_config(document(scenario="wave"))


@pytest.mark.parametrize("section", [
    {"kind": "circle_with_potential", "n": 2},
    {"kind": "circle_with_potential", "n": 2, "v0_samples": [0.25] * 8, "v0_samples_file": "v0.csv"},
    {"kind": "sphere", "n": 1},
    {"kind": "circle", "n": 2, "rho0": 0.0},
    {"kind": "sphere", "n": 4, "k_max": -1},
])
def test_bad_cross_sections(section):
    with pytest.raises(ConfigError):
        config.parse_config(document(cross_section=section))


def test_top_level_must_be_a_mapping():
    with pytest.raises(ConfigError):
        config.parse_config([1, 2])
    with pytest.raises(ConfigError):
        config.parse_config(None)


def test_tolerances_must_be_positive():
    with pytest.raises(ConfigError):
        config.parse_config(document(tolerances={"slope": -0.1}))


def test_load_config_applies_overrides(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(
        "scenario: strichartz_scaling\n"
        "cross_section: {kind: sphere, n: 4, k_max: 1}\n"
        "grid: {points_per_decade: 48}\n"
        "norms: {q: 4.0}\n"
        "sweep: {dyadic: [0, 2]}\n",
        encoding="utf-8",
    )
    overrides = {"cross_section": {"k_max": 3}, "grid": {"points_per_decade": None}, "jobs": 2}
    loaded = config.load_config(str(path), overrides)
    assert loaded.cross_section.k_max == 3
    assert loaded.cross_section.n == 4
    assert loaded.grid.points_per_decade == 48
    assert loaded.jobs == 2
    assert loaded.norms.q == 4.0


@pytest.mark.parametrize("overrides", [
    {"cross_section": {"k_max": None}, "grid": {"points_per_decade": None}, "jobs": None},
    {"cross_section": {"k_max": 3}},
])
def test_overrides_never_supply_a_missing_cross_section(tmp_path, overrides):
    path = tmp_path / "run.yaml"
    path.write_text("scenario: kss\nsweep: [1.0, 2.0]\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        config.load_config(str(path), overrides)


def test_cross_section_needs_a_dimension():
    with pytest.raises(ConfigError):
        config.parse_config(document(cross_section={"kind": "sphere"}))


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        config.load_config(str(tmp_path / "missing.yaml"))
    broken = tmp_path / "broken.yaml"
    broken.write_text("scenario: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        config.load_config(str(broken))


def test_samples_file_is_relative_to_the_config(tmp_path):
    (tmp_path / "v0.csv").write_text("\n".join(["0.25"] * 32) + "\n", encoding="utf-8")
    path = tmp_path / "run.yaml"
    path.write_text(
        "scenario: strichartz_scaling\n"
        "cross_section: {kind: circle_with_potential, n: 2, v0_samples_file: v0.csv, k_max: 1}\n"
        "norms: {q: 6.0}\n"
        "sweep: [1.0, 2.0, 4.0]\n",
        encoding="utf-8",
    )
    loaded = config.load_config(str(path))
    assert Path(loaded.cross_section.v0_samples_file) == tmp_path / "v0.csv"
    section = config.cross_section_from_config(loaded)
    assert section.kind == "circle_with_potential"
    assert len(section.spectrum(1)) == 3


def test_missing_samples_file_is_a_config_error(tmp_path):
    parsed = config.parse_config(
        document(cross_section={"kind": "circle_with_potential", "n": 2, "v0_samples_file": "nowhere.csv"}),
        str(tmp_path),
    )
    with pytest.raises(ConfigError):
        config.cross_section_from_config(parsed)


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_are_valid(path):
    loaded = config.load_config(str(path))
    assert loaded.scenario != "selftest"
    config.cross_section_from_config(loaded)


def test_result_table_rows_must_match_columns():
    with pytest.raises(ValidationError):
        ResultTable(name="t", sweep_key="R", columns=["R", "value"], rows=[[1.0]])


def test_result_table_sorts_by_sweep_key():
    table = ResultTable(name="t", sweep_key="R", columns=["tag", "R"],
                        rows=[["b", 4.0], ["a", 0.5], ["c", 2.0], ["a", 2.0]])
    assert table.sorted_rows() == [["a", 0.5], ["a", 2.0], ["c", 2.0], ["b", 4.0]]
