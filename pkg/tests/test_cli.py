import json

import pytest

from steklov_iso import cli


def run(tmp_path, *args, sub="out"):
    out = tmp_path / sub
    code = cli.main([*args, "--out", str(out)])
    return code, out


def test_gassmann(tmp_path, capsys):
    code, out = run(tmp_path, "gassmann-check")
    assert code == 0
    res = json.loads((out / "gassmann.json").read_text())
    assert res["order"] == 168 and res["almost_conjugate"] and not res["conjugate"]
    assert json.loads(capsys.readouterr().out)["passed"]


def test_graph_spectra_files(tmp_path):
    code, out = run(tmp_path, "graph-spectra")
    assert code == 0
    rows = (out / "graph_spectra.csv").read_text().splitlines()
    assert rows[0] == "index,eigenvalue_H1,eigenvalue_H2" and len(rows) == 8
    assert (out / "schreier_H1.dot").exists()


def test_spectrum_deterministic(tmp_path):
    args = ("spectrum", "--refine", "1", "--k", "6", "--alpha", "-1,0.5")
    c1, o1 = run(tmp_path, *args, sub="a")
    c2, o2 = run(tmp_path, *args, sub="b")
    assert c1 == c2 == 0
    assert (o1 / "spectrum.csv").read_bytes() == (o2 / "spectrum.csv").read_bytes()
    assert (o1 / "spectrum.json").read_bytes() == (o2 / "spectrum.json").read_bytes()
    assert (o1 / "spectrum.svg").exists()
    assert len((o1 / "spectrum.csv").read_text().splitlines()) == 13


def test_compare_negative_control(tmp_path):
    cfg = tmp_path / "disk.yaml"
    cfg.write_text("scene: disk\nagainst: square\nk: 6\nrefinement: 1\n")
    code, out = run(tmp_path, "compare", "--config", str(cfg))
    assert code == cli.EXIT_CHECK
    res = json.loads((out / "compare.json").read_text())
    assert not res["passed"]


def test_compare_two_triangle_config(tmp_path):
    cfg = tmp_path / "f.yaml"
    cfg.write_text("scene: triangles-P\nk: 8\nalpha: 0\nsigma: [0.5, 2.0]\n")
    code, out = run(tmp_path, "compare", "--config", str(cfg), "--refine", "1")
    assert code == 0
    assert (out / "compare_robin.svg").exists()


def test_transplant_and_density(tmp_path):
    code, out = run(tmp_path, "transplant-check", "--refine", "1", sub="t")
    assert code == 0
    assert json.loads((out / "transplant.json").read_text())["invertible"]
    code, out = run(tmp_path, "density-check", "--refine", "1", "--k", "8", "--alpha", "0,-1", sub="d")
    assert code == 0
    res = json.loads((out / "density.json").read_text())
    assert res["check"]["passed"] and not res["negative_control"]["passed"]


def test_build_domain(tmp_path):
    code, out = run(tmp_path, "build-domain", "--refine", "1")
    assert code == 0
    dom = json.loads((out / "domain.json").read_text())
    assert [d["diameter"] for d in dom["domains"]][0] != dom["domains"][1]["diameter"]
    assert (out / "mesh_M1.svg").exists()


@pytest.mark.parametrize("content,needle", [
    ("scene: nowhere\n", "unknown scene"),
    ("scene: buser\nbogus: 1\n", "unknown config keys"),
    ("k: 0\n", "k must be"),
    ("rho: {arc: -1}\n", "nonnegative"),
    ("- a list\n", "mapping"),
])
def test_config_errors(tmp_path, capsys, content, needle):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(content)
    code, _ = run(tmp_path, "spectrum", "--config", str(cfg))
    assert code == cli.EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config" and needle in err["message"]


def test_alpha_on_dirichlet_eigenvalue_is_reported(tmp_path, capsys):
    # the square's clamped spectrum starts near 2 pi^2; probe an alpha sitting on it
    from steklov_iso import scenes as sc, spectral as sp
    from steklov_iso.tiling import mesh
    m = mesh(sc.single_tile("square"), 1)
    lam = sp.dirichlet_spectrum(sp.assemble(m, {t: "dirichlet" for t in m.classes()}), 1).eigenvalues[0]
    code, out = run(tmp_path, "spectrum", "--config", str(_write(tmp_path, "scene: square\nk: 4\n")),
                    "--refine", "1", "--alpha", repr(float(lam)))
    assert code == cli.EXIT_FAILED
    assert "Dirichlet spectrum" in json.loads(capsys.readouterr().err)["message"]
    assert (out / "error.json").exists()


def _write(tmp_path, text):
    p = tmp_path / "scene.yaml"
    p.write_text(text)
    return p


def test_unknown_command():
    assert cli.main(["fly"]) != 0


def test_shipped_configs_load():
    from pathlib import Path
    import argparse
    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.yaml"))
    assert files
    for f in files:
        args = argparse.Namespace(command="compare", config=str(f), out=None, k=None, alpha=None,
                                  sigma=None, refine=None, tol=None, seed=None)
        cfg = cli.load_config(args)
        assert cfg.scene in cli.sc.SCENES
