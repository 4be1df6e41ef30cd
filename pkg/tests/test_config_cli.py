import numpy as np
import pytest
import yaml

from qcamodels import Lattice, excitation_state
from qcamodels.cli import main
from qcamodels.config import PRESETS, build, load_config, parse_config, preset_text
from qcamodels.exceptions import ConfigParseError, ConfigurationError


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def mutate(preset, fn):
    data = yaml.safe_load(preset_text(preset))
    fn(data)
    return yaml.safe_dump(data)


def read_csv(path):
    lines = open(path).read().splitlines()
    return lines[0], [row.split(",") for row in lines[1:]]


# config

@pytest.mark.parametrize("name", PRESETS)
def test_presets_build(name):
    built = build(load_config(name))
    assert built.kind in ("mqca", "cqca", "ctqca", "eca")
    assert built.steps > 0


def test_unknown_key_rejected():
    text = preset_text("walk-mqca").replace("run:\n", "run:\n  speed: 3\n")
    with pytest.raises(ConfigParseError, match="speed"):
        parse_config(text)


def test_ragged_matrix_names_key_and_line():
    text = mutate("walk-mqca", lambda d: d["model"]["u_a"][2].pop())
    with pytest.raises(ConfigParseError) as err:
        parse_config(text)
    assert "model.u_a" in str(err.value) and "line" in str(err.value)


def test_yaml_syntax_error():
    with pytest.raises(ConfigParseError):
        parse_config("lattice: [1, 2\n")


def test_non_unitary_on_load():
    text = mutate("walk-mqca", lambda d: d["model"]["u_a"][0].__setitem__(0, [2, 0]))
    with pytest.raises(ConfigurationError):
        build(parse_config(text))


def test_non_hermitian_on_load():
    text = mutate("flipflop-ctqca", lambda d: d["model"]["couplings"][0]["matrix"][1].__setitem__(2, [0, 1]))
    with pytest.raises(ConfigurationError):
        build(parse_config(text))


def test_small_rounding_is_projected_to_unitary():
    text = mutate("walk-mqca", lambda d: d["model"]["u_a"][1].__setitem__(1, [0.5 + 1e-10, 0.5]))
    m = build(parse_config(text)).model
    u = m.u_a_
    assert np.max(np.abs(u.conj().T @ u - np.eye(4))) < 1e-14


def test_initial_state_exactly_one_form():
    text = mutate("walk-mqca", lambda d: d["initial_state"].__setitem__("bitstring", "00000001"))
    with pytest.raises(ConfigParseError):
        parse_config(text)
    text = mutate("walk-mqca", lambda d: d.__setitem__("initial_state", {"bitstring": "00000010"}))
    s = build(parse_config(text)).initial_state()
    np.testing.assert_array_equal(s.amplitudes, excitation_state(Lattice((8,)), [1]).amplitudes)


# run

def test_run_walk_csv_shape(tmp_path):
    out = tmp_path / "walk.csv"
    assert main(["run", "walk-mqca", "--steps", "10", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == "step,site,p1"
    assert len(rows) == 11 * 8
    assert all(0 <= float(r[2]) <= 1 for r in rows)


def test_run_identity_constant_rows(tmp_path):
    eye = [[[1 if i == j else 0, 0] for j in range(4)] for i in range(4)]

    def make_identity(d):
        d["model"]["u_a"] = eye
        d["model"]["u_b"] = eye
    path = write(tmp_path, "id.yaml", mutate("walk-mqca", make_identity))
    out = tmp_path / "id.csv"
    assert main(["run", path, "--steps", "3", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    by_step = [[r[2] for r in rows if r[0] == str(t)] for t in range(4)]
    assert all(b == by_step[0] for b in by_step)


def test_run_malformed_exit_2(tmp_path, capsys):
    path = write(tmp_path, "bad.yaml", mutate("walk-mqca", lambda d: d["model"]["u_a"][2].pop()))
    assert main(["run", path]) == 2
    assert "model.u_a" in capsys.readouterr().err


def test_run_non_unitary_exit_3(tmp_path):
    path = write(tmp_path, "bad.yaml", mutate("walk-mqca", lambda d: d["model"]["u_a"][0].__setitem__(0, [2, 0])))
    assert main(["run", path]) == 3


def test_run_cap_exit_4(tmp_path, monkeypatch):
    monkeypatch.setenv("QCA_MAX_QUBITS", "6")
    assert main(["run", "walk-mqca", "--steps", "1"]) == 4


def test_run_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["run", "flipflop-ctqca", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


def test_run_amplitude_dump(tmp_path):
    amps = tmp_path / "amps.csv"
    assert main(["run", "walk-mqca", "--steps", "2", "--out", str(tmp_path / "p.csv"),
                 "--dump-amplitudes", str(amps)]) == 0
    header, rows = read_csv(amps)
    assert header == "step,index,re,im" and len(rows) == 3 * 256


def test_run_eca_preset(tmp_path):
    out = tmp_path / "r30.csv"
    assert main(["run", "rule30", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert {r[2] for r in rows} <= {"0", "1"}


# compare

def test_compare_self_and_equivalent(capsys):
    assert main(["compare", "walk-mqca", "walk-mqca"]) == 0
    assert "max deviation 0.000e+00" in capsys.readouterr().out
    assert main(["compare", "walk-mqca", "walk-cqca", "--steps", "10", "--tol", "1e-8"]) == 0


def test_compare_different_models_fail():
    assert main(["compare", "walk-mqca", "flipflop-ctqca", "--tol", "1e-12"]) == 1


def test_compare_lattice_mismatch_exit_3(tmp_path):
    path = write(tmp_path, "w6.yaml", mutate("flipflop-ctqca", lambda d: d["lattice"].__setitem__("extents", [6])))
    assert main(["compare", "walk-mqca", path]) == 3


# transpile

def test_transpile_mqca_to_cqca(tmp_path, capsys):
    out = tmp_path / "c.yaml"
    assert main(["transpile", "--from", "mqca", "--to", "cqca", "walk-mqca", "--out", str(out)]) == 0
    assert "certification PASS" in capsys.readouterr().out
    built = build(load_config(str(out)))
    assert built.kind == "cqca"
    assert main(["compare", "walk-mqca", str(out), "--tol", "1e-8"]) == 0


def test_transpile_flags_and_directions(capsys):
    assert main(["transpile", "--from", "cqca", "--to", "ctqca", "walk-cqca"]) == 2
    assert main(["transpile", "--from", "ctqca", "--to", "mqca", "flipflop-ctqca"]) == 5
    assert "ctqca -> cqca -> mqca" in capsys.readouterr().err


def test_transpile_cqca_ctqca_round(tmp_path):
    out = tmp_path / "p.yaml"
    assert main(["transpile", "--from", "cqca", "--to", "ctqca", "walk-cqca", "--dt", "0.2", "--out", str(out)]) == 0
    assert main(["compare", "walk-cqca", str(out), "--tol", "1e-8"]) == 0


def test_transpile_ctqca_to_cqca(tmp_path):
    out = tmp_path / "q.yaml"
    code = main(["transpile", "--from", "ctqca", "--to", "cqca", "flipflop-ctqca", "--order", "2",
                 "--out", str(out)])
    assert code == 0
    assert build(load_config(str(out))).kind == "cqca"


# verify

def test_verify_walk(capsys):
    assert main(["verify", "walk-mqca", "--tol", "1e-10"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4 and all(line.endswith("PASS") for line in lines)


def test_verify_single_check(capsys):
    assert main(["verify", "walk-mqca", "--checks", "unitarity"]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 1


def test_verify_corrupted_preset(tmp_path, capsys):
    path = write(tmp_path, "bad.yaml", mutate("walk-mqca", lambda d: d["model"]["u_a"][0].__setitem__(0, [2, 0])))
    assert main(["verify", path, "--checks", "unitarity"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_verify_cap_exit_4(tmp_path):
    path = write(tmp_path, "big.yaml", mutate("flipflop-ctqca", lambda d: d["lattice"].__setitem__("extents", [13])))
    assert main(["verify", path]) == 4


# eca

def test_eca_text_and_csv(tmp_path, capsys):
    assert main(["eca", "--width", "11", "--steps", "3"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows == [".....#.....", "....###....", "...##..#...", "..##.####.."]
    out = tmp_path / "e.csv"
    assert main(["eca", "--row", "00100", "--steps", "1", "--format", "csv", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header == "step,cell,value" and [r[2] for r in data if r[0] == "1"] == list("01110")


def test_eca_width_error():
    assert main(["eca", "--width", "2"]) == 3
