import pytest

from thinch.config import ConfigError, ExperimentConfig, parse_config
from thinch.geometry import GeometryError


def test_parse_values_and_comments():
    text = """
    # torus with a wavy outer face
    surface.kind = torus
    surface.R = 3        # major radius
    thickness.preset = sinusoidal
    thickness.params = [0.1, 2, 1.0, 0.0]
    study.epsilons = 0.2, 0.1, 0.05
    study.v0 = "tanh"
    """
    out = parse_config(text)
    assert out == {
        "surface.kind": "torus",
        "surface.R": 3,
        "thickness.preset": "sinusoidal",
        "thickness.params": [0.1, 2, 1.0, 0.0],
        "study.epsilons": [0.2, 0.1, 0.05],
        "study.v0": "tanh",
    }
    cfg = ExperimentConfig(out)
    assert cfg.chart().R == 3.0
    assert cfg.profile().params == (0.1, 2.0, 1.0, 0.0)


def test_unknown_key_is_an_error():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("grid.n4 = 3")
    with pytest.raises(ConfigError):
        ExperimentConfig({"bulk.taus": 1e-5})
    with pytest.raises(ConfigError):
        parse_config("epsilon 0.1")


def test_epsilon_list_checks():
    with pytest.raises(ConfigError, match="at least 3"):
        ExperimentConfig({"study.epsilons": [0.1]}).epsilons()
    with pytest.raises(ConfigError, match="decreasing"):
        ExperimentConfig({"study.epsilons": [0.1, 0.2, 0.05]}).epsilons()


def test_builders():
    cfg = ExperimentConfig()
    assert cfg.grid().shape == (48, 24, 9)
    assert cfg.grid(0.05).eps == 0.05
    assert cfg.potential().name == "quartic_double_well"
    poly = cfg.replace(potential__preset="polynomial", potential__coeffs=[0, 0, 1.0])
    assert poly.potential().dF(2.0) == 4.0
    with pytest.raises(ConfigError):
        cfg.replace(potential__preset="polynomial").potential()
    with pytest.raises(ConfigError):
        cfg.replace(potential__preset="log").potential()
    with pytest.raises(GeometryError):
        cfg.replace(surface__kind="cylinder").chart()


def test_from_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("epsilon = 0.05\nbulk.seed = 9\n")
    cfg = ExperimentConfig.from_file(p)
    assert cfg["epsilon"] == 0.05 and cfg["bulk.seed"] == 9 and cfg["grid.n1"] == 48
