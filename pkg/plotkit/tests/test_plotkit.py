import hashlib

import numpy as np
import pytest
from click.testing import CliRunner

from plotkit import ParseError, read_mesh_dump, read_run_csv, render, \
    slope_final_half
from plotkit.cli import main

RUN_CSV = """step,dof,eta_land2,eta2_eig_max,eta_max_rel,err_max_rel,n_unconverged,eig_called,lambda_1,lambda_2,eta2_1,eta2_2
1,100,0.5,1.0,0.05,0.01,2,1,19.8,49.5,0.9,1.0
2,200,0.2,0.4,0.008,0.004,2,1,19.75,49.4,0.3,0.4
3,400,0.08,0.1,0.002,0.001,1,1,19.74,49.37,0.09,0.1
4,800,0.02,0.02,0.0004,0.0003,0,1,19.739,49.36,0.018,0.02
"""

MESH = """mesh v1 3
0 0 0 0 0.5 0.5 0 2
1 0 0.5 0 1 0.5 0 3
2 0 0 0.5 1 1 1 4
"""

LAB_ENV = """x,u,neg_u,psi1_scaled
0,0,0,0
0.5,0.125,-0.125,0.1
1,0,0,0
"""

LAB_FOUR = """x,u,partial1,partial5
0,0,0,0
0.5,0.125,0.12,0.1249
1,0,0,0
"""


@pytest.fixture
def run_csv(tmp_path):
    f = tmp_path / "unit_square_LR_0.csv"
    f.write_text(RUN_CSV)
    return f


def test_read_run_csv_columns(run_csv):
    cols = read_run_csv(run_csv)
    assert np.array_equal(cols["step"], [1, 2, 3, 4])
    assert cols["lambda_2"][3] == 49.36


def test_missing_column_named_in_error(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("step,dof\n1,10\n")
    with pytest.raises(ParseError, match="eta_max_rel"):
        read_run_csv(f)


def test_mesh_dump_parses(tmp_path):
    f = tmp_path / "m.mesh"
    f.write_text(MESH)
    cells = read_mesh_dump(f)
    assert len(cells) == 3
    assert cells[1].p == 3 and cells[2].subdomain == 1


def test_mesh_dump_count_mismatch(tmp_path):
    f = tmp_path / "m.mesh"
    f.write_text("mesh v1 5\n" + "\n".join(MESH.splitlines()[1:]) + "\n")
    with pytest.raises(ParseError, match="5"):
        read_mesh_dump(f)


def test_slope_uses_final_half():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    # first half junk, final half slope exactly -2
    y = np.array([100.0, -3.0, -6.0, -8.0])
    assert slope_final_half(x, y) == pytest.approx(-2.0)


def test_slope_matches_polyfit(run_csv):
    cols = read_run_csv(run_csv)
    x = np.sqrt(cols["dof"])
    y = np.log10(cols["eta_max_rel"])
    expected = np.polyfit(x[-2:], y[-2:], 1)[0]
    assert slope_final_half(x, y) == pytest.approx(expected)


def test_envelope_figure_slope_negative(run_csv, tmp_path):
    out, slope = render("envelope", [run_csv], tmp_path / "e.png")
    assert out.exists() and slope < 0


def test_all_kinds_render(run_csv, tmp_path):
    (tmp_path / "m.mesh").write_text(MESH)
    (tmp_path / "env.csv").write_text(LAB_ENV)
    (tmp_path / "fo.csv").write_text(LAB_FOUR)
    for kind, src in [("envelope", run_csv), ("per-pair", run_csv),
                      ("mesh", tmp_path / "m.mesh"),
                      ("lab1d-envelope", tmp_path / "env.csv"),
                      ("lab1d-fourier", tmp_path / "fo.csv")]:
        out, _ = render(kind, [src], tmp_path / f"{kind}.png")
        assert out.exists()
    out, _ = render("compare", [run_csv, run_csv], tmp_path / "c.png")
    assert out.exists()


def test_rendering_is_read_only_and_deterministic(run_csv, tmp_path):
    before = hashlib.sha256(run_csv.read_bytes()).hexdigest()
    out1, _ = render("envelope", [run_csv], tmp_path / "a.png",
                     style="paper")
    out2, _ = render("envelope", [run_csv], tmp_path / "b.png",
                     style="paper")
    assert hashlib.sha256(run_csv.read_bytes()).hexdigest() == before
    assert out1.read_bytes() == out2.read_bytes()


def test_fixed_p_axes_log_log(run_csv, tmp_path):
    _, slope_hp = render("envelope", [run_csv], tmp_path / "hp.png")
    _, slope_fp = render("envelope", [run_csv], tmp_path / "fp.png",
                         fixed_p=True)
    assert slope_hp != slope_fp


def test_cli_error_on_missing_column(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("step,dof\n1,10\n")
    res = CliRunner().invoke(main, ["envelope", "--in", str(f),
                                    "--out", str(tmp_path / "x.png")])
    assert res.exit_code == 1
    assert "eta_max_rel" in res.output


def test_cli_renders_and_reports_slope(run_csv, tmp_path):
    res = CliRunner().invoke(main, ["envelope", "--in", str(run_csv),
                                    "--out", str(tmp_path / "x.png"),
                                    "--style", "paper"])
    assert res.exit_code == 0
    assert "slope" in res.output
