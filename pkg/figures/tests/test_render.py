import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from walkfigures import (
    FIGURE_KINDS,
    FigureJob,
    MissingStepError,
    SchemaError,
    render,
)
from walkfigures.cli import main

DATA = Path(__file__).resolve().parent / "data" / "cyclic"
PAPER_STEPS = (30, 50, 100, 400)


@pytest.mark.parametrize("kind", FIGURE_KINDS)
def test_render_every_kind(kind, tmp_path):
    job = FigureJob(series_dir=DATA, kind=kind, steps=PAPER_STEPS, out_dir=tmp_path)
    result = render(job)
    assert result.path.exists()
    assert result.path.stat().st_size > 1000
    assert result.kind == kind


def test_regime_marker_at_94(tmp_path):
    job = FigureJob(series_dir=DATA, kind="effective_dimension", out_dir=tmp_path)
    result = render(job)
    assert result.marker_step == 94


def test_missing_step_is_an_error(tmp_path):
    job = FigureJob(series_dir=DATA, kind="g2", steps=(30, 401), out_dir=tmp_path)
    with pytest.raises(MissingStepError, match="missing step 401"):
        render(job)


def test_schema_mismatch_names_the_column(tmp_path):
    broken = tmp_path / "series"
    broken.mkdir()
    shutil.copy(DATA / "densities.csv", broken / "densities.csv")
    text = (broken / "densities.csv").read_text().splitlines()
    text[0] = text[0].replace("step", "time")
    (broken / "densities.csv").write_text("\n".join(text))
    job = FigureJob(series_dir=broken, kind="density", steps=(30,), out_dir=tmp_path)
    with pytest.raises(SchemaError, match="'step'"):
        render(job)
    job = FigureJob(series_dir=tmp_path, kind="g2", steps=(30,), out_dir=tmp_path)
    with pytest.raises(SchemaError, match="g2.csv not found"):
        render(job)


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown figure kind"):
        FigureJob(series_dir=DATA, kind="sparkline", out_dir=tmp_path)


def test_cli_renders_and_reports_errors(tmp_path, capsys):
    assert main([str(DATA), "--kind", "density", "--steps", "30,400",
                 "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out.strip()
    assert out.endswith("density.png")
    assert Path(out).exists()

    assert main([str(DATA), "--kind", "g2", "--steps", "777",
                 "--out", str(tmp_path)]) == 1
    assert "missing step 777" in capsys.readouterr().err


def test_package_never_imports_the_simulator():
    code = (
        "import sys; import walkfigures; import walkfigures.cli; "
        "sys.exit(1 if any(m.startswith('bosonwalk') for m in sys.modules) else 0)"
    )
    proc = subprocess.run([sys.executable, "-c", code])
    assert proc.returncode == 0
