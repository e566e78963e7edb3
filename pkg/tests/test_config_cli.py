import numpy as np
import pytest

from rodfilm.cli import main
from rodfilm.config import ExperimentConfig
from rodfilm.errors import ConfigError

BASE = """
problem:
  preset: circle
  nodes: 128
  rho: 0.0
  g: [0, 0, -1]
  elastic: {{c1: 1, c2: 1, c3: 1, intrinsic: [1, 0, 0]}}
solver:
  max_outer_iters: 2
  film_iters: 30
  rod_iters: 1
  seed: 3
output:
  dir: {out}
  prefix: circ
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def base_config(tmp_path):
    return write(tmp_path, "circ.yaml", BASE.format(out=tmp_path / "out"))


# ---------------- config parsing ----------------------------------------


def test_round_trip_is_semantically_identical(tmp_path):
    cfg = ExperimentConfig.from_file(base_config(tmp_path))
    again = ExperimentConfig.loads(cfg.dumps())
    assert cfg == again
    assert ExperimentConfig.loads(again.dumps()) == cfg


def test_unknown_keys_fail_with_field_path():
    with pytest.raises(ConfigError, match=r"problem\.sectoin"):
        ExperimentConfig.loads("problem:\n  preset: circle\n  sectoin: {kind: disk}")
    with pytest.raises(ConfigError, match=r"solver\.film_stpe"):
        ExperimentConfig.loads("problem:\n  preset: circle\nsolver:\n  film_stpe: 1")
    with pytest.raises(ConfigError, match=r"config\.outputs"):
        ExperimentConfig.loads("problem:\n  preset: circle\noutputs: {}")


def test_value_diagnostics_carry_paths():
    cases = [
        ("problem:\n  preset: nope", "preset"),
        ("problem: {}", "exactly one"),
        ("problem:\n  preset: circle\n  epsilon: 0", "epsilon"),
        ("problem:\n  preset: circle\n  g: [0, 0]", r"problem\.g"),
        ("problem:\n  preset: circle\n  integrand: {kind: matrix}", r"integrand\.m"),
        ("problem:\n  preset: circle\noutput:\n  formats: []", "formats"),
        ("problem:\n  rods:\n    - L: 1.0", r"rods\[0\]\.samples"),
    ]
    for text, frag in cases:
        with pytest.raises(ConfigError, match=frag):
            ExperimentConfig.loads(text)


def test_not_yaml_fails_cleanly():
    with pytest.raises(ConfigError, match="YAML"):
        ExperimentConfig.loads("problem: [unclosed")


def test_explicit_rod_build():
    n = 16
    doc = {
        "problem": {
            "rods": [{
                "L": float(2 * np.pi),
                "samples": [[1.0, 0.0, 0.0]] * (n + 1),
                "f0": {"x0": [0, 1, 0], "t0": [1, 0, 0], "d0": [0, -1, 0]},
                "section": {"kind": "disk", "radius": 0.1},
            }],
            "delta0": 0.25,
            "constraint_mode": "reduced",
        },
    }
    cfg = ExperimentConfig.parse(doc)
    sys = cfg.build_system()
    assert sys.nrods == 1 and sys.delta0 == 0.25
    assert cfg.constraint_mode(sys) == "reduced"
    assert ExperimentConfig.loads(cfg.dumps()) == cfg


def test_preset_section_override():
    cfg = ExperimentConfig.loads(
        "problem:\n  preset: circle\n  nodes: 128\n"
        "  section: {kind: disk, radius: 0.07}\n"
    )
    sys = cfg.build_system()
    assert np.isclose(sys.rods[0].profile.nu, 0.07)


def test_solver_block_is_validated_at_parse_time():
    with pytest.raises(ConfigError, match="solver"):
        ExperimentConfig.loads(
            "problem:\n  preset: circle\nsolver:\n  backtrack: 2.0"
        )


# ---------------- subcommands -------------------------------------------


def test_check_admissible_circle(tmp_path, capsys):
    rc = main(["check", "--config", base_config(tmp_path)])
    assert rc == 0
    assert (tmp_path / "out" / "circ_check.txt").exists()
    assert "admissible: True" in capsys.readouterr().out


def test_check_infeasible_names_constraint(tmp_path, capsys):
    text = BASE.format(out=tmp_path / "out").replace(
        "rho: 0.0", "rho: 0.0\n  constraint_mode: reduced\n  delta0: 50.0"
    )
    rc = main(["check", "--config", write(tmp_path, "bad.yaml", text)])
    assert rc == 2
    out = capsys.readouterr().out
    assert "C5" in out and "FAIL" in out


def test_check_malformed_config_exits_1(tmp_path, capsys):
    rc = main(["check", "--config", write(tmp_path, "t.yaml",
                                          "problem:\n  preset: circle\n  nodse: 4")])
    assert rc == 1
    assert "problem.nodse" in capsys.readouterr().err


def test_minimize_writes_artifacts(tmp_path, capsys):
    rc = main(["minimize", "--config", base_config(tmp_path)])
    assert rc == 0
    for suffix in ("_trace.csv", "_surface.obj", "_summary.txt"):
        assert (tmp_path / "out" / f"circ{suffix}").exists(), suffix
    summary = (tmp_path / "out" / "circ_summary.txt").read_text()
    assert "film (upper bound)" in summary
    assert "admissible" in summary
    trace = (tmp_path / "out" / "circ_trace.csv").read_text().splitlines()
    assert trace[0] == "iteration,e_el,e_g,film,total,max_violation,accepted"
    assert len(trace) >= 2


def test_minimize_bad_output_dir_fails_before_solving(tmp_path):
    rc = main(["minimize", "--config", base_config(tmp_path),
               "--out", "/proc/definitely/not/writable"])
    assert rc == 1


def test_minimize_trace_is_byte_deterministic(tmp_path):
    cfgpath = base_config(tmp_path)
    assert main(["minimize", "--config", cfgpath, "--out", str(tmp_path / "r1")]) == 0
    assert main(["minimize", "--config", cfgpath, "--out", str(tmp_path / "r2")]) == 0
    b1 = (tmp_path / "r1" / "circ_trace.csv").read_bytes()
    b2 = (tmp_path / "r2" / "circ_trace.csv").read_bytes()
    assert b1 == b2


def test_dimred_requires_sweep(tmp_path, capsys):
    rc = main(["dimred", "--config", base_config(tmp_path)])
    assert rc == 1
    assert "eps_sweep" in capsys.readouterr().err


def test_dimred_writes_sweep(tmp_path, capsys):
    text = BASE.format(out=tmp_path / "out").replace(
        "seed: 3", "seed: 3\n  eps_sweep: [0.4, 0.2, 0.1]"
    )
    rc = main(["dimred", "--config", write(tmp_path, "s.yaml", text)])
    assert rc == 0
    csv = (tmp_path / "out" / "circ_dimred.csv").read_text().splitlines()
    assert csv[0] == "eps,E_el,E_g_eps,film,total,gap_to_E0"
    assert len(csv) == 4
    assert "fitted gap rate" in capsys.readouterr().out


def test_link_reports_values(tmp_path, capsys):
    s = np.linspace(0, 2 * np.pi, 129)[:-1]
    a = np.stack([np.cos(s), np.sin(s), np.zeros_like(s)], axis=1)
    b = np.stack([1 + np.cos(s), np.zeros_like(s), np.sin(s)], axis=1)
    pa = tmp_path / "a.csv"
    pb = tmp_path / "b.csv"
    np.savetxt(pa, a, delimiter=",")
    np.savetxt(pb, b, delimiter=",")
    rc = main(["link", str(pa), str(pb), "--out", str(tmp_path / "lk")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "global radius 1" in out
    assert "link(0,1)" in out
    rows = (tmp_path / "lk" / "link.csv").read_text().splitlines()
    assert rows[0] == "kind,i,j,value,raw"
    link_rows = [r for r in rows if r.startswith("link")]
    assert len(link_rows) == 1 and link_rows[0].split(",")[3] in ("-1", "1")


def test_link_missing_file_exits_1(tmp_path, capsys):
    rc = main(["link", str(tmp_path / "missing.csv")])
    assert rc == 1
    assert "cannot read" in capsys.readouterr().err
