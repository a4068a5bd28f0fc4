from pathlib import Path

import pytest

from cce_dynamics.cli.main import build_experiment, parse_config_file, read_config_file
from cce_dynamics.errors import ConfigError


def _write(tmp_path, text: str) -> Path:
    path = tmp_path / "experiment.cfg"
    path.write_text(text, encoding="utf-8")
    return path


def test_full_config_file(tmp_path):
    path = _write(
        tmp_path,
        "# sweep on the example\n"
        "game = example-3x3\n"
        "eta = 0.05\n"
        "horizon = 250   # short\n"
        "\n"
        "seeds = 1, 2,3\n"
        "checks = rvu,stability\n"
        "normalize = true\n"
        "out = results/trace.csv\n",
    )
    cfg = parse_config_file(path)
    assert cfg.eta == 0.05
    assert cfg.horizon == 250
    assert cfg.seeds == [1, 2, 3]
    assert cfg.checks == ["rvu", "stability"]
    assert cfg.normalize is True
    assert cfg.out == Path("results/trace.csv")
    assert cfg.init is None


def test_defaults_for_empty_file(tmp_path):
    cfg = parse_config_file(_write(tmp_path, "# nothing set\n"))
    assert cfg.game == "example-3x3"
    assert cfg.eta == 0.1
    assert cfg.horizon == 1000
    assert cfg.seeds == [] and cfg.checks == []


def test_auto_learning_rate_is_kept_symbolic():
    assert build_experiment({"eta": "auto"}).eta == "auto"
    assert build_experiment({"eta": " AUTO "}).eta == "auto"
    assert build_experiment({"eta": "0.2"}).eta == 0.2


def test_unknown_key_names_the_key(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        read_config_file(_write(tmp_path, "game = example-3x3\nlearning_rate = 0.1\n"))
    assert excinfo.value.key == "learning_rate"


def test_duplicate_key_rejected(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        read_config_file(_write(tmp_path, "eta = 0.1\neta = 0.2\n"))
    assert excinfo.value.key == "eta"


def test_line_without_equals_rejected(tmp_path):
    with pytest.raises(ConfigError):
        read_config_file(_write(tmp_path, "horizon 100\n"))


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        read_config_file(Path("does/not/exist.cfg"))


@pytest.mark.parametrize(
    "values, key",
    [
        ({"eta": "-0.1"}, "eta"),
        ({"eta": "fast"}, "eta"),
        ({"horizon": "0"}, "horizon"),
        ({"init": "corner"}, "init"),
        ({"checks": "rvu,energy"}, "checks"),
        ({"projection_tol": "0"}, "projection_tol"),
    ],
)
def test_invalid_values_name_the_key(values, key):
    with pytest.raises(ConfigError) as excinfo:
        build_experiment(values)
    assert excinfo.value.key == key
