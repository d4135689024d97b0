from pathlib import Path

import pytest

from src.core.errors import ConfigError
from src.core.settings import PROJECT_ROOT
from src.interfaces.config_format import coerce, load_config, parse_config, parse_value, serialize

AWGN_TEXT = """\
command = bounds-awgn
noise_var = 1.0
mean_energy = 1.0
energy_process = exponential
epsilon = 0.1
"""


def problem_lines(exc: ConfigError) -> set:
    return {line for line, _ in exc.problems}


def test_default_configs_load() -> None:
    awgn = load_config(PROJECT_ROOT / "config" / "default_awgn.conf")
    assert awgn.command == "bounds-awgn"
    assert awgn.get("lambda") == "auto"
    assert awgn.energy_process().mean == pytest.approx(1.0)
    dmc = load_config(PROJECT_ROOT / "config" / "default_dmc.conf")
    assert dmc.is_dmc
    assert dmc.dmc_spec().w.shape == (2, 2)


def test_serialize_round_trip(tmp_path: Path) -> None:
    cfg = load_config(PROJECT_ROOT / "config" / "default_dmc.conf")
    path = tmp_path / "again.conf"
    path.write_text(serialize(cfg))
    again = load_config(path)
    assert again.command == cfg.command
    assert again.parameters == cfg.parameters


def test_every_problem_reported_with_line() -> None:
    text = "command = bounds-awgn\ncolour = blue\nepsilon = 1.5\nnoise_var 1.0\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert {2, 3, 4} <= problem_lines(info.value)
    messages = " ".join(message for _, message in info.value.problems)
    assert "epsilon must lie in (0,1)" in messages
    assert "unknown key 'colour'" in messages


def test_duplicate_and_empty_values() -> None:
    with pytest.raises(ConfigError) as info:
        parse_config(AWGN_TEXT + "epsilon = 0.2\nseed =\n")
    assert problem_lines(info.value) == {6, 7}


def test_command_is_required() -> None:
    with pytest.raises(ConfigError) as info:
        parse_config("noise_var = 1.0\nepsilon = 0.1\n")
    assert (None, "command is required") in info.value.problems


def test_command_argument_overrides_file() -> None:
    cfg = parse_config(AWGN_TEXT, command="simulate")
    assert cfg.command == "simulate"


def test_unterminated_matrix() -> None:
    with pytest.raises(ConfigError) as info:
        parse_config("command = bounds-dmc\nw = [[0.9, 0.1],\n     [0.1, 0.9]\ncost = [0, 1]\n")
    assert 2 in problem_lines(info.value)


def test_cross_key_constraints() -> None:
    with pytest.raises(ConfigError) as info:
        parse_config("command = bounds-awgn\nmean_energy = 1.0\nepsilon = 0.1\nn_min = 10\nn_max = 5\n")
    messages = [message for _, message in info.value.problems]
    assert "noise_var is required for bounds-awgn" in messages
    assert "n_min must not exceed n_max" in messages


def test_channel_must_be_stochastic() -> None:
    text = "command = bounds-dmc\nw = [[0.5, 0.4], [0.1, 0.9]]\ncost = [0, 1]\nmean_energy = 0.3\nepsilon = 0.1\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert any("sum to 1" in message for _, message in info.value.problems)


def test_value_parsing() -> None:
    assert parse_value("1e-3") == pytest.approx(1e-3)
    assert parse_value("[[1, 0], [0, 1]]") == [[1, 0], [0, 1]]
    assert coerce("lambda", "auto") == "auto"
    assert coerce("points", 4.0) == 4
    with pytest.raises(ValueError):
        coerce("lambda", 1.5)
    with pytest.raises(ValueError):
        coerce("points", 2.5)
    with pytest.raises(ValueError):
        coerce("mode", "fast")
