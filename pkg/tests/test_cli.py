from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncmap.cli import (
    PRESETS,
    ConfigError,
    RunConfig,
    apply_setting,
    load_preset,
    main,
    parse_config,
)
from ncmap.sequence import load_w


@pytest.mark.parametrize("number", PRESETS)
def test_presets_parse_and_validate(number):
    cfg = load_preset(number)
    cfg.validate()
    assert cfg.n == 2 and cfg.h0 == 0.05


def test_preset_settings():
    assert load_preset(1).x0 == (0.0, 1.0)
    assert load_preset(4).x0 == (1.0, 2.0) and load_preset(4).objective == "ripple"
    assert load_preset(5).sigma == (0.4, 0.4) and load_preset(5).objective == "norm"
    assert (load_preset(3).alpha1, load_preset(3).alpha2) == (1.0, 0.0)


@pytest.mark.parametrize("number", PRESETS)
def test_round_trip(number):
    cfg = load_preset(number)
    assert parse_config(cfg.to_text()) == cfg


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 3), st.floats(0, 3), st.lists(st.floats(0.01, 10), max_size=6),
       st.one_of(st.none(), st.integers(0, 10**6)), st.one_of(st.none(), st.floats(1e-9, 1)),
       st.floats(-5, 5), st.sampled_from(["constant", "harmonic"]))
def test_round_trip_property(a1, a2, sigma, seed, stall, phi, schedule):
    cfg = RunConfig(alpha1=a1, alpha2=a2, sigma=tuple(sigma), seed=seed, stall_tol=stall,
                    pair_params={"phi": phi}, schedule=schedule,
                    target_params={"a": 1.5, "q": ((0.0, -1.0), (1.0, 0.0))})
    assert parse_config(cfg.to_text()) == cfg


def test_overrides_and_short_keys():
    cfg = apply_setting(load_preset(1), "max_iters", "0")
    assert cfg.max_iters == 0
    cfg = apply_setting(cfg, "pair.a", "2")
    assert cfg.pair_params == {"a": 2.0}
    with pytest.raises(ConfigError):
        apply_setting(cfg, "nonsense", "1")
    with pytest.raises(ConfigError):
        apply_setting(cfg, "map.n", "two")
    with pytest.raises(ConfigError):
        parse_config("just words")


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\nmap.h0 = 0.1  # trailing\n")
    assert cfg.h0 == 0.1


def test_validation_gate():
    with pytest.raises(ConfigError):
        replace(load_preset(1), x0=(0.0,)).validate()
    with pytest.raises(ConfigError):
        replace(load_preset(1), schedule="cubic").validate()


def test_construct_prints_period(tmp_path, capsys, oracles):
    assert main(["construct", "--preset", "1", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == f"m={oracles['sequence_lengths']['sim1']}"
    W, meta = load_w(tmp_path / "W.txt")
    assert W.shape == (4, meta["m"])


def test_construct_elongated_via_sigma_flag(tmp_path, capsys, oracles):
    assert main(["construct", "--preset", "1", "--sigma", "1.5,0.2,1.5,0.2", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == f"m={oracles['sequence_lengths']['sim1_elongated']}"


def test_exit_codes(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["construct", "--preset", "2", "alpha1=1", "alpha2=0", "--out", out]) == 2
    assert main(["construct", "--preset", "2", "--sigma", "0.001,0.001", "--out", out]) == 3
    assert main(["verify", "shoelace", "--preset", "3", "--out", out]) == 2
    assert main(["construct", "--preset", "1", "bogus=1"]) == 2
    assert main(["simulate", "--out", out]) == 2
    err = capsys.readouterr().err
    assert "invalid config" in err and "search exhausted" in err


def test_exit_code_runtime(tmp_path, monkeypatch):
    from ncmap import cli

    def boom(center):
        return (lambda x: float("nan")), None

    monkeypatch.setitem(cli.OBJECTIVES, "quadratic", boom)
    assert main(["run", "--preset", "1", "--out", str(tmp_path)]) == 4


def test_simulate_zero_iterations(tmp_path):
    assert main(["simulate", "--preset", "1", "max_iters=0", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("0,0,1,")


def test_simulate_writes_plot_data(tmp_path, capsys):
    assert main(["simulate", "--preset", "2", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("m=4\n")
    for name in ("trajectory.csv", "W.txt", "areas.csv", "partial_sums.csv", "config.cfg"):
        assert (tmp_path / name).exists()
    rows = (tmp_path / "areas.csv").read_text().splitlines()
    assert rows[0] == "p,q,area" and len(rows) == 17
    assert parse_config((tmp_path / "config.cfg").read_text()) == replace(load_preset(2), out=str(tmp_path))
    x = np.loadtxt(tmp_path / "trajectory.csv", delimiter=",", skiprows=1)
    assert np.linalg.norm(x[-1, 1:3] - [1, 2]) <= 0.25


def test_single_point_preset_has_no_area_file(tmp_path):
    assert main(["simulate", "--preset", "3", "max_iters=5", "--out", str(tmp_path)]) == 0
    assert not (tmp_path / "areas.csv").exists()


def test_simulate_is_byte_stable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["simulate", "--preset", "4", "max_iters=200", "--seed", "3", "--out", str(d)]) == 0
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_noisy_run_uses_seed(tmp_path):
    args = ["run", "--preset", "1", "max_iters=50", "noise_std=0.05"]
    main(args + ["--seed", "1", "--out", str(tmp_path / "a")])
    main(args + ["--seed", "1", "--out", str(tmp_path / "b")])
    main(args + ["--seed", "2", "--out", str(tmp_path / "c")])
    text = [(tmp_path / d / "trajectory.csv").read_text() for d in "abc"]
    assert text[0] == text[1] != text[2]


@pytest.mark.parametrize("suite", ["order", "shoelace", "brockett", "interlacing"])
def test_verify_suites_pass(suite, tmp_path, capsys):
    assert main(["verify", suite, "--preset", "1", "--m-max", "50", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith(f"CHECK {suite} PASS")


def test_verify_catalog(capsys):
    assert main(["verify", "catalog", "--workers", "4"]) == 0
    assert capsys.readouterr().out.startswith("CHECK catalog PASS")


def test_verify_failure_exit(tmp_path, capsys):
    # from this far start the default step grid is pre-asymptotic (slope near 0.9)
    assert main(["verify", "order", "--preset", "1", "objective.center=1,2", "run.x0=-0.84,-0.93",
                 "--out", str(tmp_path)]) == 1
    assert "FAIL" in capsys.readouterr().out
