import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from msgate.cli import main
from msgate.dynamics import DetuningSchedule, SimParams, evolve, monochromatic_pair
from msgate.errors import ConfigError, NoOscillation
from msgate.experiments import (
    extract_oscillation_frequency,
    parse_config,
    preset_config,
    ripple_amplitude,
    run_experiment,
)
from msgate.experiments import io
from msgate.experiments.config import parse_internal
from msgate.fockspace import BasisSpec, make_vib_state, product_state

BASE = """
[experiment]
name = {name}
[physics]
eta = 0.1
n_max = {n_max}
{physics}
[drive]
rabi = 0.1
detuning = 0.9
{drive}
[initial]
{initial}
[run]
{run}
"""


def cfg_text(name="rabi", n_max=8, physics="", drive="", initial="", run=""):
    return BASE.format(name=name, n_max=n_max, physics=physics, drive=drive, initial=initial, run=run)


# -- frequency extraction ---------------------------------------------------

T = np.arange(0.0, 7540.0, 1.0)
W = 5e-4


def test_extract_clean_cosine():
    w = extract_oscillation_frequency(T, np.cos(W * T / 2) ** 2)
    assert w == pytest.approx(W, rel=1e-3)


def test_extract_with_ripple():
    y = np.cos(W * T / 2) ** 2 + 0.05 * np.cos(0.1 * T)
    assert extract_oscillation_frequency(T, y) == pytest.approx(W, rel=1e-2)


@given(st.floats(0, 2 * np.pi), st.floats(0.05, 1.9))
def test_extract_with_arbitrary_ripple(phase, freq):
    y = np.cos(W * T / 2) ** 2 + 0.05 * np.cos(freq * T + phase)
    assert extract_oscillation_frequency(T, y) == pytest.approx(W, rel=1e-2)


def test_extract_constant_raises():
    with pytest.raises(NoOscillation):
        extract_oscillation_frequency(T, np.full(T.size, 0.7))


def test_ripple_amplitude_synthetic():
    t = np.arange(0, 2000, 0.5)
    y = 0.5 + 0.02 * np.sin(0.9 * t)
    assert ripple_amplitude(t, y, 2 * np.pi / 0.9) == pytest.approx(0.02, rel=0.1)


def test_ripple_shrinks_with_weaker_drive():
    b = BasisSpec(10)
    s0 = product_state("gg", make_vib_state("fock", b, n=0), b)
    amps = []
    for rabi in (0.1, 0.05):
        params = SimParams(eta=0.1, t_final=800.0, basis=b, sample_interval=0.25)
        rec = evolve(s0, monochromatic_pair(rabi, 0.9), DetuningSchedule(), params)
        amps.append(ripple_amplitude(rec.times, rec.population("gg"), 2 * np.pi / 0.1))
    assert amps[1] < amps[0]


# -- configuration ----------------------------------------------------------

def test_missing_eta_names_field():
    text = cfg_text().replace("eta = 0.1\n", "")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == "physics.eta"


@pytest.mark.parametrize("edit,field", [
    (("detuning = 0.9", "detuning = 1.0"), "drive.detuning"),
    (("detuning = 0.9", "detuning = abc"), "drive.detuning"),
    (("name = rabi", "name = nope"), "experiment.name"),
    (("n_max = 8", "n_max = 8\nbogus = 1"), "physics.bogus"),
])
def test_config_errors(edit, field):
    with pytest.raises(ConfigError) as info:
        parse_config(cfg_text().replace(*edit))
    assert info.value.field == field


def test_resolved_config_round_trips():
    cfg = parse_config(cfg_text(initial="vibration = mixture\nlevels = 0 1",
                                run="seed = 5", physics="t_final = 100"))
    again = parse_config(cfg.to_ini())
    assert again == cfg
    for name in ("fig2", "fig3", "fig4", "cnot", "n-independence"):
        p = preset_config(name)
        assert parse_config(p.to_ini()) == p


def test_parse_internal():
    v = parse_internal("gg:1, eg:1")
    assert np.allclose(v, np.array([1, 0, 1, 0]) / math.sqrt(2))
    assert np.allclose(parse_internal("ee:-1j"), [0, 0, 0, -1j])
    with pytest.raises(ConfigError):
        parse_internal("gg:x")


# -- files ------------------------------------------------------------------

def test_timeseries_schema(tmp_path):
    t = np.linspace(0, 1, 3)
    rhos = np.tile(np.eye(4, dtype=complex) / 4, (3, 1, 1))
    path = tmp_path / "ts.csv"
    io.write_timeseries(path, t, rhos, 0.0, np.zeros(3), nu_hz=2e5)
    assert path.read_text().startswith("# schema=1\nt,t_seconds,rho_gggg_re,rho_gggg_im")
    header, data = io.read_timeseries(path)
    assert len(header) == 36 and data.shape == (3, 36)
    assert data[2, 1] == pytest.approx(1 / (2 * np.pi * 2e5))


def test_cnot_run_writes_all_files(tmp_path):
    cfg = parse_config(cfg_text(name="cnot"))
    res = run_experiment(cfg, out_dir=str(tmp_path))
    assert {"timeseries.csv", "summary.txt", "plot.gp", "config.resolved"} <= set(os.listdir(tmp_path))
    assert res.passed
    assert "fidelity_simulated_R" in (tmp_path / "summary.txt").read_text()
    assert "set datafile separator ','" in (tmp_path / "plot.gp").read_text()


def _heating_cfg(tmp, seed=3):
    return parse_config(cfg_text(
        name="heating", n_max=10, physics="t_final = 400",
        drive="kind = bichromatic",
        initial="vibration = thermal\nn_bar = 0.5",
        run=f"seed = {seed}\nn_trajectories = 1\noutput = {tmp}",
    ) + "[heating]\ngamma = 0.01\nn_therm = 0.5\n")


def test_heating_run_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_experiment(_heating_cfg(a))
    run_experiment(_heating_cfg(b))
    for name in ("jumps.csv", "timeseries.csv", "timeseries_gamma0.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert len((a / "jumps.csv").read_text().splitlines()) > 2
    # and from the resolved configuration alone
    c = tmp_path / "c"
    cfg = parse_config((a / "config.resolved").read_text())
    run_experiment(cfg, out_dir=str(c))
    assert (a / "timeseries.csv").read_bytes() == (c / "timeseries.csv").read_bytes()
    assert (a / "config.resolved").read_text() == (c / "config.resolved").read_text()


def test_physical_units_in_summary(tmp_path):
    text = cfg_text(name="cnot") + "[physical_units]\nnu_hz = 200000\n"
    run_experiment(parse_config(text), out_dir=str(tmp_path))
    assert "transfer_time_s: 0.005" in (tmp_path / "summary.txt").read_text()


# -- command line -----------------------------------------------------------

def _write(tmp_path, text):
    p = tmp_path / "c.ini"
    p.write_text(text)
    return str(p)


def test_cli_validate(tmp_path, capsys):
    assert main(["validate", _write(tmp_path, cfg_text())]) == 0
    assert "n_trajectories = 10" in capsys.readouterr().out
    assert main(["validate", _write(tmp_path, cfg_text().replace("eta = 0.1\n", ""))]) == 2
    assert "physics.eta" in capsys.readouterr().err


def test_cli_guard_violation(tmp_path):
    path = _write(tmp_path, cfg_text(n_max=6, initial="vibration = fock\nn = 2",
                                     run=f"output = {tmp_path / 'o'}"))
    assert main(["run", path]) == 3


def test_cli_check_failure(tmp_path):
    path = _write(tmp_path, cfg_text(physics="t_final = 300", run=f"output = {tmp_path / 'o'}"))
    assert main(["run", path]) == 0
    assert main(["run", path, "--check"]) == 4


def test_cli_preset(tmp_path):
    assert main(["preset", "cnot", "--out", str(tmp_path), "--check"]) == 0
    assert (tmp_path / "config.resolved").exists()
