import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from dissipative_lattice.cli import EXIT_CONFIG, EXIT_FAILURE, main
from dissipative_lattice.config import (
    EXPERIMENTS,
    PRESETS,
    ConfigError,
    load_config_text,
    normalized_json,
    parse_config,
)
from dissipative_lattice.output import read_csv

EXACT_ARGS = ["exact", "--lattice", "1d:3:periodic", "--N", "2", "--U", "0", "--kappa", "1", "--quiet"]


def test_list_names_every_experiment(capsys):
    assert main(["--list"]) == 0
    out = capsys.readouterr().out
    for name in EXPERIMENTS:
        assert name in out
    for name in ("fig2", "depletion3d", "relax-tails", "eta-small"):
        assert name in out


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dissipative_lattice.cli", "--list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "lowdim-evolve" in proc.stdout


def test_exact_run_reaches_condensate(tmp_path):
    assert main(EXACT_ARGS + ["--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "trajectory.csv")
    assert header == ["time [hbar/J]", "fidelity [1]", "purity [1]", "condensate_fraction [1]", "total_N [1]"]
    assert float(rows[-1][1]) >= 0.999
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["summary"]["kernel_dimension"] == 1
    assert meta["config"]["lattice"] == {"M": 3, "a": 1.0, "boundary": "periodic", "d": 1}


def test_empty_config_names_missing_field(tmp_path, capsys):
    cfg = tmp_path / "empty.json"
    cfg.write_text("")
    assert main(["exact", "--config", str(cfg)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "lattice" in err and "required" in err.lower()


def test_syntax_error_reports_line_and_column(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "experiment": "exact",\n  "lattice": {"d": 1 "M": 3}\n}\n')
    assert main(["--config", str(cfg)]) == EXIT_CONFIG
    assert f"{cfg}:3:" in capsys.readouterr().err


def test_unknown_keys_rejected(capsys):
    with pytest.raises(ConfigError, match="lattice.colour"):
        parse_config({"experiment": "exact", "lattice": {"d": 1, "M": 3, "colour": "red"}})
    with pytest.raises(ConfigError, match="unknown rate"):
        parse_config({"experiment": "exact", "lattice": {"d": 1, "M": 3}, "jumps": {"rates": {"kappa9": 1}}})


def test_runtime_failure_exit_code(tmp_path, capsys):
    # depletion needs quasimomenta, which an open lattice does not have
    code = main(["depletion", "--lattice", "1d:8:open", "--U", "0.1", "--out", str(tmp_path), "--quiet"])
    assert code == EXIT_FAILURE
    assert "periodic" in capsys.readouterr().err


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "exact", "lattice": {"d": 1, "M": 4}, "params": {"U": 0.3}, "N": 1}))
    assert main(["--config", str(cfg), "--U", "0.7", "--t-max", "2", "--t-num", "3", "--out", str(tmp_path / "o"), "--quiet"]) == 0
    meta = json.loads((tmp_path / "o" / "metadata.json").read_text())
    assert meta["config"]["params"]["U"] == 0.7
    assert meta["config"]["N"] == 1
    assert meta["config"]["times"]["num"] == 3


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SIM_OUTPUT_DIR", str(tmp_path))
    assert main(EXACT_ARGS + ["--t-max", "1", "--t-num", "2"]) == 0
    assert (tmp_path / "exact" / "trajectory.csv").exists()


def _outputs(d: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "timing.json"}


@pytest.mark.parametrize("argv", [
    ["exact", "--lattice", "1d:3:open", "--N", "2", "--U", "0.5", "--seed", "11", "--t-max", "3", "--t-num", "4"],
    ["--preset", "eta-small"],
    ["--preset", "meanfield-modes"],
])
def test_same_config_gives_identical_bytes(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out", str(a), "--quiet"]) == 0
    assert main(argv + ["--out", str(b), "--quiet"]) == 0
    assert _outputs(a) == _outputs(b)
    assert (a / "timing.json").exists()


def test_random_initial_state_depends_on_seed(tmp_path):
    base = ["exact", "--lattice", "1d:3:open", "--N", "2", "--t-max", "1", "--t-num", "2", "--quiet"]
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"initial": {"state": "random-pure"}}))
    main(base + ["--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "s1")])
    main(base + ["--config", str(cfg), "--seed", "2", "--out", str(tmp_path / "s2")])
    assert (tmp_path / "s1" / "trajectory.csv").read_bytes() != (tmp_path / "s2" / "trajectory.csv").read_bytes()
    meta = json.loads((tmp_path / "s1" / "metadata.json").read_text())
    assert meta["seed"] == 1


def test_jobs_do_not_change_results(tmp_path):
    argv = ["--preset", "depletion-lowdim", "--quiet"]
    assert main(argv + ["--out", str(tmp_path / "j1")]) == 0
    assert main(argv + ["--jobs", "2", "--out", str(tmp_path / "j2")]) == 0
    assert _outputs(tmp_path / "j1") == _outputs(tmp_path / "j2")


def test_jsonl_round_trips_csv_values(tmp_path):
    assert main(EXACT_ARGS + ["--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "trajectory.csv")
    records = [json.loads(line) for line in (tmp_path / "trajectory.jsonl").read_text().splitlines()]
    assert len(records) == len(rows)
    for rec, row in zip(records, rows):
        for (name, value), cell in zip(rec.items(), row):
            assert float(cell) == value


def test_csv_uses_seventeen_digits(tmp_path):
    assert main(EXACT_ARGS + ["--out", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "trajectory.csv")
    digits = [len(c.replace(".", "").replace("-", "").lstrip("0").split("e")[0]) for r in rows for c in r]
    assert max(digits) == 17


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_config_echo_is_a_fixed_point(name):
    text = normalized_json(parse_config(PRESETS[name]))
    assert normalized_json(parse_config(load_config_text(text))) == text


def test_infinite_time_survives_normalization():
    cfg = parse_config(PRESETS["fig2"])
    assert math.isinf(cfg.times.values[-1])
    assert '"inf"' in normalized_json(cfg)


# golden x_t from the fig2 preset (tau = 10 ... 1e6), frozen from a reviewed run
FIG2_FRONT = [18.009528010303271, 31.774967970397803, 56.360978582379808,
              100.14387864436098, 178.03737090269564, 316.56353126161861]


def test_fig2_preset_matches_golden_data(tmp_path):
    assert main(["--preset", "fig2", "--out", str(tmp_path), "--quiet"]) == 0
    header, rows = read_csv(tmp_path / "curves.csv")
    assert header == ["tau [1]", "time [hbar/J]", "x [a]", "G [1]", "valid [-]"]
    taus = list(dict.fromkeys(r[0] for r in rows))
    assert taus == ["0", "10", "100", "1000", "10000", "100000", "1000000", "inf"]
    _, front = read_csv(tmp_path / "front.csv")
    x_t = [float(r[2]) for r in front if r[2]]
    assert x_t == pytest.approx(FIG2_FRONT, rel=1e-9)
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["summary"]["front_exponent"] == pytest.approx(0.24913476541306465, rel=1e-9)
