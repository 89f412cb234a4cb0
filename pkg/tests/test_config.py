import pytest

from coma.config import ECHO_PREFIX, SimConfig, build_config, parse_config_text, resolve_key
from coma.errors import ConfigError


def test_scenario_defaults():
    cfg = build_config("highdim")
    assert (cfg.n, cfg.p, cfg.m_active, cfg.B, cfg.family) == (100, 120, 10, 500, "lasso")
    assert build_config("blockshift").T == 1450


def test_overrides_typed_and_raw():
    cfg = build_config("independence", K="12", alpha=0.2, seed="9")
    assert (cfg.K, cfg.alpha, cfg.seed) == (12, 0.2, 9)


def test_section_prefix_and_dashes():
    assert resolve_key("online.gamma") == "gamma"
    assert resolve_key("lam-min") == "lam_min"
    with pytest.raises(ConfigError):
        resolve_key("scenario.gamma")
    with pytest.raises(ConfigError):
        resolve_key("nonsense")


@pytest.mark.parametrize(
    "kw", [dict(alpha=1.5), dict(B=0), dict(K=0), dict(lam_min=2.0, lam_max=1.0), dict(eta=-1.0), dict(scenario="x")]
)
def test_invalid(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw)


def test_seed_required():
    with pytest.raises(ConfigError):
        build_config("splines").require_seed()


def test_echo_round_trip():
    cfg = build_config("stream", seed=4, eta=0.5, symmetric=True, source="data.csv")
    text = cfg.echo() + "scenario=stream\ncoverage.merged=0.9\n"
    back = parse_config_text(text)
    assert build_config(**back) == cfg


def test_parse_errors_name_line():
    with pytest.raises(ConfigError, match=r"cfg:2"):
        parse_config_text("seed=1\nbogus=3\n", "cfg")
    with pytest.raises(ConfigError, match=r"cfg:1"):
        parse_config_text("no equals sign\n", "cfg")
    with pytest.raises(ConfigError, match="K"):
        parse_config_text("K=ten\n", "cfg")


def test_comments_and_blank_lines():
    assert parse_config_text("# a comment\n\nscenario.K = 4\n") == {"K": 4}


def test_lam_grid_geometric():
    g = build_config("splines", K=3, lam_min=0.01, lam_max=1.0).lam_grid()
    assert g == pytest.approx([0.01, 0.1, 1.0])
    assert build_config("splines", K=1).lam_grid() == [0.01]


def test_echo_lines_prefixed():
    lines = build_config("splines", seed=1).echo().splitlines()
    assert all(line.startswith(ECHO_PREFIX) for line in lines)
    assert lines[0] == ECHO_PREFIX + "scenario=splines"
