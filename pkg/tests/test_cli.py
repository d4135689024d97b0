from pathlib import Path

import pytest

from src.interfaces.cli import EXIT_INVALID, EXIT_OK, main

GOLDEN = Path(__file__).resolve().parent / "golden"

AWGN_CONF = """\
command = bounds-awgn
noise_var = 1.0
energy_process = exponential
mean_energy = 1.0
epsilon = 0.1
lambda = 0.5
n_min = 10000
n_max = 100000
points = 2
"""

DMC_CONF = """\
command = bounds-dmc
w = [[0.89, 0.11],
     [0.11, 0.89]]
cost = [0.0, 1.0]
energy_process = uniform
low = 0.0
high = 0.6
epsilon = 0.1
n_min = 1000
n_max = 10000
points = 2
"""


def write(tmp_path: Path, name: str, text: str) -> Path:
    path = tmp_path / name
    path.write_text(text)
    return path


def header(path: Path) -> str:
    return "".join(path.read_text().splitlines(keepends=True)[:2])


def test_bounds_awgn_csv(tmp_path: Path) -> None:
    config = write(tmp_path, "awgn.conf", AWGN_CONF)
    out = tmp_path / "awgn.csv"
    assert main(["bounds-awgn", "--config", str(config), "--out", str(out)]) == EXIT_OK
    assert header(out) == (GOLDEN / "bounds_awgn_header.txt").read_text()
    assert len(out.read_text().splitlines()) == 4


def test_bounds_output_is_deterministic(tmp_path: Path) -> None:
    config = write(tmp_path, "awgn.conf", AWGN_CONF)
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["bounds-awgn", "--config", str(config), "--out", str(first)]) == EXIT_OK
    assert main(["bounds-awgn", "--config", str(config), "--out", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_flags_override_config(tmp_path: Path) -> None:
    config = write(tmp_path, "awgn.conf", AWGN_CONF)
    out = tmp_path / "awgn.csv"
    assert main(["bounds-awgn", "--config", str(config), "--points", "3", "--out", str(out)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 5


def test_bounds_dmc_csv(tmp_path: Path) -> None:
    config = write(tmp_path, "dmc.conf", DMC_CONF)
    out = tmp_path / "dmc.csv"
    assert main(["bounds-dmc", "--config", str(config), "--eta", "0.01", "--out", str(out)]) == EXIT_OK
    assert header(out) == (GOLDEN / "bounds_dmc_header.txt").read_text()


def test_simulate_csv(tmp_path: Path) -> None:
    config = write(tmp_path, "sim.conf", AWGN_CONF.replace("bounds-awgn", "simulate") + "n = 200\n")
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--config", str(config), "--trials", "300", "--seed", "7", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert header(out) == (GOLDEN / "simulate_header.txt").read_text()
    assert [line.split(",")[0] for line in lines[2:]] == ["E0", "E1", "E2", "E3"]


def test_simulate_output_is_deterministic(tmp_path: Path) -> None:
    config = write(tmp_path, "sim.conf", AWGN_CONF.replace("bounds-awgn", "simulate") + "n = 200\n")
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (first, second):
        args = ["simulate", "--config", str(config), "--trials", "300", "--seed", "7", "--out", str(out)]
        assert main(args) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_sweep_prefixes_rows(tmp_path: Path) -> None:
    config = write(tmp_path, "awgn.conf", AWGN_CONF)
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--config", str(config), "--param", "epsilon", "--values", "0.05,0.1", "--out", str(out)])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[1].startswith("param,value,n,")
    assert len(lines) == 2 + 2 * 2


def test_sweep_rejects_invalid_value(tmp_path: Path) -> None:
    config = write(tmp_path, "awgn.conf", AWGN_CONF)
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--config", str(config), "--param", "epsilon", "--values", "0.1,2", "--out", str(out)])
    assert code == EXIT_INVALID
    assert not out.exists()


@pytest.mark.parametrize(
    "text",
    [
        AWGN_CONF.replace("epsilon = 0.1", "epsilon = 1.5"),
        AWGN_CONF.replace("noise_var = 1.0", "noise_var = -1"),
        AWGN_CONF + "bogus = 1\n",
    ],
)
def test_invalid_config_exits_one(tmp_path: Path, text: str) -> None:
    config = write(tmp_path, "bad.conf", text)
    out = tmp_path / "bad.csv"
    assert main(["bounds-awgn", "--config", str(config), "--out", str(out)]) == EXIT_INVALID
    assert not out.exists()


def test_missing_config_exits_one(tmp_path: Path) -> None:
    assert main(["bounds-awgn", "--out", str(tmp_path / "x.csv")]) == EXIT_INVALID
    assert main(["bounds-awgn", "--config", str(tmp_path / "absent.conf")]) == EXIT_INVALID


def test_verify_fast(tmp_path: Path) -> None:
    out = tmp_path / "verify.csv"
    assert main(["verify", "--fast", "--out", str(out)]) == EXIT_OK
    assert out.read_text().splitlines()[1] == "check,cases,violations,worst,passed"
