import csv
import json

import pytest
import yaml

from vibronic import cli
from vibronic.presets import PRESETS

STEADY = ["pop_e", "n_vib", "b_re", "b_im", "sigma_re", "sigma_im", "n_zpl", "n_s", "n_as",
          "gamma_zpl_kcps", "gamma_s_kcps", "gamma_as_kcps", "residual", "leak", "error"]

# preset -> (user overrides shrinking the run, expected header, expected row count)
GOLDEN = {
    "fig2b": ({}, ["omega_zpl_rabi"] + STEADY, 41),
    "fig2b_incoherent": ({"sweep": {"points": 4}}, ["g_as"] + STEADY, 4),
    "fig3a": ({"model": {"g_s": 10.0}, "sweep": {"points": 3}}, ["delta0_locked"] + STEADY, 3),
    "fig3b": ({"model": {"g_s": 10.0, "omega_zpl_rabi": 0.1}, "sweep": {"points": 3}},
              ["delta0_locked"] + STEADY, 3),
    "fig3c": ({"model": {"g_s": 10.0}, "sweep": {"points": 3}}, ["delta_v_only"] + STEADY, 3),
    "fig3d": ({"model": {"g_s": 10.0, "omega_zpl_rabi": 0.1}, "sweep": {"points": 3}},
              ["delta_v_only"] + STEADY, 3),
    "fig4a": ({"model": {"g_s": 15.0, "n_cutoff": 12}, "sweep": {"points": 2}}, ["delta0_locked"] + STEADY, 2),
    "fig4b": ({"model": {"g_s": 15.0, "n_cutoff": 12}, "wigner": {"q": [-3, 3, 4], "p": [-3, 3, 5]}},
              ["q", "p", "W"], 20),
    "fig5": ({"trajectory": {"t_final": 0.1}},
             ["t", "parity_mean", "parity_stderr", "n_vib_mean", "n_vib_stderr", "n_zpl_mean",
              "n_zpl_stderr"], 51),
    "fig6": ({"trajectory": {"n_traj": 2, "t_final": 0.3, "record_stride": 10}},
             ["t", "n_zpl_mean", "n_zpl_stderr", "n_as_mean", "n_as_stderr", "x_sigma_mean",
              "x_sigma_stderr"], 11),
    "fig7": ({"trajectory": {"n_traj": 2, "t_final": 0.3, "record_stride": 10}},
             ["t", "x_sigma_mean", "x_sigma_stderr", "n_zpl_mean", "n_zpl_stderr"], 11),
    "fig8": ({}, ["g_over_gamma0", "gv_over_gamma0", "chi", "cooperativity"], 61 * 61),
    "fig1": ({"spectrum": {"modes": [dict(eta=0.3, omega=1000.0, gamma=10.0)]}},
             ["label", "center_ghz", "fwhm_ghz", "weight"], 3),
    "design_free_space": ({}, ["scenario", "e_field_v_per_m", "rabi_ghz", "gain", "chi", "rate_kcps"], 1),
    "design_patch": ({}, ["scenario", "e_field_v_per_m", "rabi_ghz", "gain", "chi", "rate_kcps"], 1),
    "design_metamaterial": ({}, ["scenario", "e_field_v_per_m", "rabi_ghz", "gain", "chi", "rate_kcps"], 1),
}


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_every_preset_has_a_golden_entry():
    assert set(GOLDEN) == set(PRESETS)


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_preset_golden_header_and_rows(name, tmp_path):
    overrides, header, rows = GOLDEN[name]
    cfg_path = write_yaml(tmp_path / "c.yaml", dict(schema_version=1, preset=name, **overrides))
    out = tmp_path / "out"
    assert cli.main(["run", "--config", cfg_path, "--out", str(out)]) == 0
    table = read_csv(out / "result.csv")
    assert table[0] == header
    assert len(table) - 1 == rows
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["csv_schema"] == cli.CSV_SCHEMA and manifest["preset"] == name
    if name == "fig4b":
        assert (out / "wigner.svg").exists()
    if name == "fig1":
        assert (out / "spectrum.csv").exists()


def test_missing_required_field_is_a_validation_error(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", "--preset", "fig3a", "--out", str(out)]) == 3
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "validation" and "model.g_s" in err["reason"]
    assert not out.exists()


def test_malformed_yaml_exits_2_without_outputs(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: [unclosed\n")
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(bad), "--out", str(out)]) == 2
    assert json.loads(capsys.readouterr().err.strip())["error"] == "parse"
    assert not out.exists()


@pytest.mark.parametrize("cfg", [
    dict(schema_version=1, task="steady", model=dict(gamma0=-1)),
    dict(schema_version=1, task="bogus"),
    dict(schema_version=2, task="steady"),
    dict(schema_version=1, task="steady", extra=1),
    dict(schema_version=1, task="sweep", sweep=dict(axis="g_s", start=0, stop=1, points=1)),
    dict(schema_version=1, task="sweep", sweep=dict(axis="nope", start=0, stop=1, points=3)),
])
def test_invalid_configs_exit_3(cfg, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", "--config", write_yaml(tmp_path / "c.yaml", cfg), "--out", str(out)]) == 3
    assert not out.exists()


def test_numerical_failure_exits_4(tmp_path, capsys):
    # a huge jump rate against a coarse step underflows the no-jump norm
    cfg = dict(schema_version=1, task="traj", model=dict(gamma_v=1e4, g_s=1.0, n_cutoff=4),
               drives=dict(stokes=True),
               trajectory=dict(n_traj=1, t_final=1.0, dt_max=0.5, observables=["n_vib"], initial="ground"))
    out = tmp_path / "out"
    assert cli.main(["run", "--config", write_yaml(tmp_path / "c.yaml", cfg), "--out", str(out)]) == 4
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "numerical"
    assert not out.exists()


def test_two_point_sweep(tmp_path):
    cfg = dict(schema_version=1, task="sweep", model=dict(n_cutoff=3, omega_zpl_rabi=0.1),
               drives=dict(zpl=True), sweep=dict(axis="delta0_locked", start=-1.0, stop=1.0, points=2))
    res = cli.execute(cfg)
    assert [r[0] for r in res["rows"]] == [-1.0, 1.0]


def test_fig3c_shows_dip_at_resonance():
    cfg = cli.resolve_config(dict(model=dict(g_s=10.0), sweep=dict(points=13)), preset="fig3c")
    res = cli.execute(cfg)
    h = res["header"]
    col = h.index("gamma_zpl_kcps")
    values = {r[0]: r[col] for r in res["rows"]}
    assert values[0.0] < 0.5 * max(values.values())


def test_fig4a_without_stokes_has_no_anti_stokes_emission():
    def n_as(g_s):
        cfg = cli.resolve_config(dict(model=dict(g_s=g_s, n_cutoff=20), sweep=dict(points=5)), preset="fig4a")
        res = cli.execute(cfg)
        col = res["header"].index("n_as")
        return [r[col] for r in res["rows"]]
    off, on = n_as(0.0), n_as(15.0)
    assert max(off) < 0.01 * max(on)
    # flat across the sweep on the scale of the Stokes-on signal
    assert max(off) - min(off) < 0.01 * max(on)


def test_manifest_reproduces_bit_identical_csv(tmp_path):
    cfg_path = write_yaml(tmp_path / "c.yaml", dict(
        schema_version=1, preset="fig6", trajectory=dict(n_traj=3, t_final=0.3, record_stride=10, seed=9)))
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--config", cfg_path, "--out", str(a)]) == 0
    manifest = json.loads((a / "manifest.json").read_text())
    again = write_yaml(tmp_path / "again.yaml", manifest["config"])
    assert cli.main(["run", "--config", again, "--out", str(b)]) == 0
    for name in ("result.csv", "histogram_n_zpl.csv", "histogram_n_as.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    cfg_path = write_yaml(tmp_path / "c.yaml", dict(
        schema_version=1, preset="fig6", trajectory=dict(n_traj=2, t_final=0.3, record_stride=10)))
    out = tmp_path / "o"
    assert cli.main(["run", "--config", cfg_path, "--out", str(out), "--seed", "42"]) == 0
    assert json.loads((out / "manifest.json").read_text())["seed"] == 42


def validate(tmp_path, capsys, cfg):
    assert cli.main(["validate", "--config", write_yaml(tmp_path / "v.yaml", cfg)]) == 0
    return json.loads(capsys.readouterr().out.strip())["warnings"]


def test_validate_fig5_has_no_warnings(tmp_path, capsys):
    assert validate(tmp_path, capsys, dict(schema_version=1, preset="fig5")) == []


def test_validate_coherence_warning(tmp_path, capsys):
    w = validate(tmp_path, capsys, dict(schema_version=1, task="steady",
                                        model=dict(g_s=1.0, gamma_v=10.0), drives=dict(stokes=True)))
    assert any(x.startswith("coherence") for x in w)


def test_validate_cutoff_warning(tmp_path, capsys):
    w = validate(tmp_path, capsys, dict(schema_version=1, task="steady",
                                        model=dict(g_s=20.0, g_as=20.0, gamma_v=10.0, n_cutoff=4),
                                        drives=dict(stokes=True, anti_stokes=True)))
    assert any(x.startswith("cutoff") for x in w)


def test_presets_listing(capsys):
    assert cli.main(["presets"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in PRESETS)


def test_command_task_mismatch(tmp_path):
    cfg_path = write_yaml(tmp_path / "c.yaml", dict(schema_version=1, preset="fig8"))
    assert cli.main(["steady", "--config", cfg_path, "--out", str(tmp_path / "o")]) == 3
