import csv
import io
from pathlib import Path

import pytest

from qrule import cli
from qrule.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _rows(cfg: cli.JobConfig):
    columns, rows = cli.RUNNERS[cfg.job](cfg, cfg.potential(), cfg.digest())
    text = cli.render_csv(columns, rows)
    return list(csv.DictReader(io.StringIO(text)))


def test_minimal_config_defaults():
    cfg = cli.parse_config("[potential] kind=biharmonic alpha=2 beta=3 gamma=5\n")
    assert cfg.job == "spectrum" and cfg.n_steps == 20000 and cfg.n_films == 4096
    assert cfg.window is None and cfg.branch == "decaying"


def test_negative_height_names_key():
    text = ("[potential] kind=double_square_well x_a=-2 x_b=-1 x_c=1 x_d=2\n"
            "[potential] V_I=-1 V_0=100 V_F=101\n")
    with pytest.raises(ConfigError, match=r"potential\.V_I"):
        cli.parse_config(text)


@pytest.mark.parametrize("text,pattern", [
    ("[potential] kind=harmonic\n[job] colour=red\n", r"line 2: unknown key job\.colour"),
    ("[potential] kind=harmonic\n[numeric] n_steps=abc\n", r"numeric\.n_steps expects"),
    ("[potential] kind=harmonic\n[numeric] n_steps=10\n", r"below the minimum"),
    ("[potential] kind=harmonic\n[job] window=3,1\n", r"job\.window"),
    ("[potential] kind=harmonic\n[jobs] type=scan\n", r"unknown section"),
    ("[potential] kind=torus\n", r"potential\.kind"),
    ("[potential] kind=biharmonic alpha=2 beta=3\n", r"potential\.gamma"),
    ("kind=harmonic\n", r"before any section"),
])
def test_config_errors(text, pattern):
    with pytest.raises(ConfigError, match=pattern):
        cli.parse_config(text)


def test_shipped_dsw_config_parameters():
    cfg = cli.parse_config((CONFIGS / "double_square_well.cfg").read_text())
    assert cfg.kind == "double_square_well"
    assert cfg.params == {"x_a": -2.0, "x_b": -1.0, "x_c": 1.0, "x_d": 2.0,
                          "V_I": 100.0, "V_0": 100.0, "V_F": 101.0}
    assert cfg.window == (0.0, 100.0) and cfg.job == "spectrum"


def test_segments_config():
    text = ("[potential] kind=segments\n"
            "[potential] segment=-inf,-1,constant,50 segment=-1,1,constant,0\n"
            "[potential] segment=1,inf,constant,50\n"
            "[job] type=spectrum window=0,20\n")
    rows = _rows(cli.parse_config(text))
    assert [r["n"] for r in rows] == ["0", "1", "2"]
    assert all(float(r["max_spread"]) < 5e-3 for r in rows)


def test_verify_biharmonic_second_level():
    text = ("[potential] kind=biharmonic alpha=2 beta=3 gamma=5\n"
            "[job] type=verify window=-5,9\n")
    rows = _rows(cli.parse_config(text))
    total = [r for r in rows if r["n"] == "2" and r["region_index"] == "total"]
    assert len(total) == 1 and total[0]["total_N"] == "3"
    assert abs(float(total[0]["residual_over_pi"])) <= 1e-3


@pytest.mark.xfail(strict=True, reason="0.286635 is not an eigenvalue, so no integer total")
def test_verify_listed_second_level():
    text = ("[potential] kind=biharmonic alpha=2 beta=3 gamma=5\n"
            "[job] type=verify energies=0.286635\n")
    rows = _rows(cli.parse_config(text))
    assert rows[-1]["total_N"] == "3"


def test_spectrum_dsw_routes_agree():
    rows = _rows(cli.parse_config((CONFIGS / "double_square_well.cfg").read_text()))
    assert all(float(r["max_spread"]) <= 5e-3 for r in rows)
    assert all(abs(float(r["E_shooting"]) - float(r["E_analytic"])) <= 1e-6 for r in rows)


@pytest.mark.xfail(strict=True, reason="the window holds 8 levels, in tunneling pairs")
def test_spectrum_dsw_four_rows():
    rows = _rows(cli.parse_config((CONFIGS / "double_square_well.cfg").read_text()))
    assert len(rows) == 4


def test_films_job_errors_non_increasing():
    rows = _rows(cli.parse_config((CONFIGS / "dsw_films.cfg").read_text()))
    errs = [float(r["phi_error"]) for r in rows]
    assert [int(r["n_films"]) for r in rows] == [64, 128, 256, 512, 1024, 2048, 4096]
    assert all(e <= 1e-10 for e in errs)
    assert all(r["m_total"] == "1" for r in rows)


def test_films_job_smooth_barrier_decreasing():
    text = ("[potential] kind=biharmonic alpha=2 beta=3 gamma=5\n"
            "[job] type=films window=0,4 state=0\n"
            "[numeric] film_counts=64,128,256,512,1024\n")
    rows = _rows(cli.parse_config(text))
    errs = [float(r["value_error"]) for r in rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_scan_job_columns():
    text = ("[potential] kind=harmonic\n[job] type=scan window=0.5,4.5 grid_points=64\n")
    rows = _rows(cli.parse_config(text))
    assert len(rows) == 64 and list(rows[0]) == cli.SCAN_COLUMNS


def test_every_row_carries_hash():
    cfg = cli.parse_config((CONFIGS / "harmonic.cfg").read_text())
    rows = _rows(cfg)
    assert rows and all(r["config_hash"] == cfg.digest() for r in rows)


def test_csv_is_deterministic(tmp_path):
    out = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in out:
        code = cli.main([str(CONFIGS / "double_square_well.cfg"), "--csv", str(path),
                         "--quiet"])
        assert code == cli.EXIT_OK
    assert out[0].read_bytes() == out[1].read_bytes()
    assert out[0].read_text().splitlines()[0] == ",".join(cli.SPECTRUM_COLUMNS)


def test_exit_codes(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[potential] kind=harmonic\n[job] colour=red\n")
    assert cli.main([str(bad), "--quiet"]) == cli.EXIT_CONFIG
    assert cli.main([str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG
    turning = tmp_path / "turning.cfg"
    turning.write_text("[potential] kind=harmonic\n[job] type=verify energies=-1\n")
    assert cli.main([str(turning), "--quiet"]) == cli.EXIT_TURNING
    empty = tmp_path / "empty.cfg"
    empty.write_text("[potential] kind=harmonic\n[job] type=films window=1.5,2.5\n")
    assert cli.main([str(empty), "--quiet"]) == cli.EXIT_CONVERGENCE


def test_job_override(tmp_path):
    path = tmp_path / "h.csv"
    code = cli.main([str(CONFIGS / "harmonic.cfg"), "--job", "spectrum", "--csv", str(path),
                     "--quiet"])
    assert code == cli.EXIT_OK
    assert path.read_text().startswith(",".join(cli.SPECTRUM_COLUMNS))
