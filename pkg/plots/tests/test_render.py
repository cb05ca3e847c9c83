import json
import struct
from pathlib import Path

import numpy as np
import pytest

from wilsonplots.cli import main
from wilsonplots.render import render
from wilsonplots.spec import PlotSpec, load_spec

SWEEP_COLUMNS = (
    "schema_version,n,beta,config_id,config_hash,seed,m,mq,eta_min,eta_source,"
    "sigma_min_est,solver,setup,iterations,converged,failed,rho,rho_source,"
    "rel_residual,rel_error,setup_seconds,solve_seconds"
)

SPECTRUM_COLUMNS = "schema_version,n,beta,config_id,config_hash,seed,m,row_type,k,sigma,re,im,participation"


def write_sweep_csv(path, n_configs=9, n_shifts=8, solver="bamg"):
    """Synthetic CSV in the documented harness schema."""
    rng = np.random.default_rng(42)
    etas = np.logspace(-5, -1, n_shifts)
    lines = [SWEEP_COLUMNS]
    for c in range(n_configs):
        cid = 11_000 + 1_000 * c
        for eta in map(float, etas):
            rho = float(0.1 + 0.05 * rng.random())
            iters = int(5 + 40 * eta ** -0.1)
            lines.append(
                f"1,64,6.0,{cid},abc{c:02d},7,{eta - 0.08!r},{eta - 0.08 + 2!r},{eta!r},arnoldi,"
                f"{eta!r},{solver},w,{iters},1,0,{rho!r},error,{1e-9!r},{3e-9!r},0.0,0.0"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_spectrum_csv(path, n_configs=9, dense=True):
    rng = np.random.default_rng(3)
    lines = [SPECTRUM_COLUMNS]
    for c in range(n_configs):
        cid = 11_000 + 1_000 * c
        for k in range(6):
            sig = 10.0 ** (-4 + k)
            lines.append(f"1,16,6.0,{cid},h{c},7,0.1,sigma,{k},{sig!r},,,{0.4!r}")
        if dense:
            for k in range(12):
                re, im = float(rng.uniform(0, 4)), float(rng.uniform(-1, 1))
                lines.append(f"1,16,6.0,{cid},h{c},7,0.1,eigenvalue,{k},,{re!r},{im!r},")
    Path(path).write_text("\n".join(lines) + "\n")


def png_dimensions(path):
    raw = Path(path).read_bytes()
    assert raw[:8] == b"\x89PNG\r\n\x1a\n"
    w, h = struct.unpack(">II", raw[16:24])
    return w, h


@pytest.mark.parametrize("kind", ["iterations", "rho", "resid-error"])
def test_sweep_kinds_nine_series_and_deterministic(tmp_path, kind):
    csv_path = tmp_path / "sweep.csv"
    write_sweep_csv(csv_path)
    out = tmp_path / f"{kind}.png"
    spec = PlotSpec(str(csv_path), kind, str(out), filters={"beta": 6.0, "solver": "bamg"})
    report = render(spec)
    assert report.series == 9
    first = out.read_bytes()
    render(spec)
    assert out.read_bytes() == first


def test_spectrum_kinds(tmp_path):
    csv_path = tmp_path / "spec.csv"
    write_spectrum_csv(csv_path, dense=True)
    out = tmp_path / "spectrum.png"
    report = render(PlotSpec(str(csv_path), "spectrum", str(out)))
    assert report.series == 9 and out.exists()
    # sigma-only variant falls back to value-vs-index lines
    write_spectrum_csv(csv_path, dense=False)
    report = render(PlotSpec(str(csv_path), "spectrum", str(out)))
    assert report.series == 9


def test_modefield_dimensions(tmp_path):
    n, scale = 16, 8
    grid = np.abs(np.random.default_rng(1).standard_normal((n, n)))
    field = tmp_path / "mode.txt"
    np.savetxt(field, grid, fmt="%.17g")
    out = tmp_path / "mode.png"
    report = render(PlotSpec(str(field), "modefield", str(out), scale=scale))
    assert report.series == 1
    assert png_dimensions(out) == (n * scale, n * scale)
    first = out.read_bytes()
    render(PlotSpec(str(field), "modefield", str(out), scale=scale))
    assert out.read_bytes() == first


def test_svg_deterministic(tmp_path):
    csv_path = tmp_path / "sweep.csv"
    write_sweep_csv(csv_path, n_configs=3, n_shifts=4)
    out = tmp_path / "rho.svg"
    spec = PlotSpec(str(csv_path), "rho", str(out))
    render(spec)
    first = out.read_bytes()
    render(spec)
    assert out.read_bytes() == first


def test_empty_selection_errors_and_no_file(tmp_path):
    csv_path = tmp_path / "sweep.csv"
    write_sweep_csv(csv_path, n_configs=2, n_shifts=2)
    out = tmp_path / "x.png"
    with pytest.raises(ValueError, match="no rows"):
        render(PlotSpec(str(csv_path), "rho", str(out), filters={"solver": "nope"}))
    assert not out.exists()
    with pytest.raises(ValueError, match="unknown column"):
        render(PlotSpec(str(csv_path), "rho", str(out), filters={"nonsense": 1}))


def test_missing_columns_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="missing columns"):
        render(PlotSpec(str(bad), "iterations", str(tmp_path / "y.png")))


def test_spec_validation(tmp_path):
    with pytest.raises(ValueError, match="kind"):
        PlotSpec("x.csv", "pie", "y.png")
    with pytest.raises(ValueError, match="extension"):
        PlotSpec("x.csv", "rho", "y.pdf")
    with pytest.raises(ValueError, match="scale"):
        PlotSpec("x.csv", "modefield", "y.png", scale=0)
    doc = {"input": "a.csv", "kind": "rho", "out": "b.png", "filters": {"beta": 6.0}}
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(doc))
    spec = load_spec(p)
    assert spec.filters == {"beta": 6.0}
    doc["bogus"] = 1
    p.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="unknown spec keys"):
        load_spec(p)


def test_cli_roundtrip(tmp_path, capsys):
    csv_path = tmp_path / "sweep.csv"
    write_sweep_csv(csv_path, n_configs=4, n_shifts=3)
    out = tmp_path / "fig.png"
    spec = {"input": str(csv_path), "kind": "iterations", "out": str(out)}
    spec_path = tmp_path / "s.json"
    spec_path.write_text(json.dumps(spec))
    assert main(["--spec", str(spec_path)]) == 0
    assert out.exists()
    assert "4 series" in capsys.readouterr().out

    bad = {"input": str(csv_path), "kind": "rho", "out": str(out), "filters": {"solver": "zz"}}
    spec_path.write_text(json.dumps(bad))
    assert main(["--spec", str(spec_path)]) == 1
