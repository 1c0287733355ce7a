import numpy as np
import pytest

from vatsim import experiments
from vatsim.cli import main
from vatsim.config import parse_config
from vatsim.experiments import run
from vatsim.output import parse_summary, read_csv
from vatsim.parallel import WORKERS_ENV

SHORT = "duration_ns = 0.02\n"


@pytest.fixture(autouse=True)
def _restore_workers(monkeypatch):
    # --workers writes the environment; keep it from leaking between tests
    monkeypatch.delenv(WORKERS_ENV, raising=False)


def _config(tmp_path, text=SHORT):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return str(path)


def test_estimates_summary(tmp_path, capsys):
    assert main(["estimates", "--out", str(tmp_path)]) == 0
    scalars = parse_summary((tmp_path / "estimates_summary.txt").read_text())
    assert float(scalars["kappa_per_angstrom"]) == pytest.approx(14.2, abs=0.05)
    assert float(scalars["contact_integral"]) == pytest.approx(6.65, abs=0.01)
    assert float(scalars["width_ratio_1e4_1e11"]) == pytest.approx(0.603, abs=5e-4)
    printed = capsys.readouterr().out.split()
    assert str(tmp_path / "estimates_summary.txt") in printed


def test_trace_csv_schema(tmp_path):
    assert main(["trace", "--config", _config(tmp_path), "--out", str(tmp_path)]) == 0
    names, units, rows = read_csv(tmp_path / "trace_trace.csv")
    assert names == ["t", "elongation"] and units == ["s", "m"]
    cfg = parse_config(SHORT)
    assert len(rows) == round(cfg.duration / cfg.dt)
    values = np.array([[float(x) for x in r] for r in rows])
    assert np.all(np.diff(values[:, 0]) > 0)
    # 17 significant digits: text -> double -> text is the identity
    for r in rows[:50]:
        for cell in r:
            assert format(float(cell), ".17g") == cell
    assert (tmp_path / "trace_config.txt").exists()


def test_rerun_is_bit_identical(tmp_path):
    cfg = _config(tmp_path, SHORT + "trials = 3\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["selection", "--config", cfg, "--out", str(a)]) == 0
    assert main(["selection", "--config", cfg, "--out", str(b), "--workers", "2"]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        if name.endswith("_config.txt"):
            continue
        assert (a / name).read_bytes() == (b / name).read_bytes()

    def echoed(d):
        lines = (d / "selection_config.txt").read_text().splitlines()
        return [line for line in lines if not line.startswith("output_dir")]
    assert echoed(a) == echoed(b)


def test_seed_changes_output(tmp_path):
    cfg = _config(tmp_path)
    main(["trace", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["trace", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "2"])
    assert (tmp_path / "a" / "trace_trace.csv").read_bytes() != (tmp_path / "b" / "trace_trace.csv").read_bytes()


@pytest.mark.parametrize("argv_extra, text", [
    ([], "temperature = -1\n"),
    ([], "unknown = 3\n"),
    (["--workers", "0"], SHORT),
])
def test_configuration_errors_exit_2(tmp_path, capsys, argv_extra, text):
    assert main(["trace", "--config", _config(tmp_path, text), "--out", str(tmp_path / "o")] + argv_extra) == 2
    assert "configuration error" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_missing_config_file_exits_2(tmp_path):
    assert main(["trace", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_unknown_experiment_rejected():
    with pytest.raises(SystemExit) as err:
        main(["plots"])
    assert err.value.code == 2


def test_runtime_failure_exit_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    assert main(["estimates", "--out", str(blocker)]) == 1
    assert "failed" in capsys.readouterr().err


def test_failure_leaves_no_partial_outputs(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("disk full")

    monkeypatch.setattr(experiments, "summary_text", boom)
    out = tmp_path / "out"
    assert main(["trace", "--config", _config(tmp_path), "--out", str(out)]) == 1
    assert list(out.iterdir()) == []


@pytest.mark.parametrize("experiment", ["amplitude-trace", "born-mc",
                                        pytest.param("ensemble", marks=pytest.mark.slow), "gumbel-fit"])
def test_every_experiment_runs(tmp_path, experiment):
    cfg = parse_config(SHORT + "trials = 2\nmc_pairs = 200\nobservers = 1, 2\n", {"experiment": experiment})
    if experiment in ("ensemble", "gumbel-fit"):
        cfg = cfg.replace(trials=100 if experiment == "ensemble" else 40)
    paths = run(cfg, tmp_path)
    assert paths and all(p.exists() for p in paths)
    for p in paths:
        if p.suffix == ".csv":
            names, units, _ = read_csv(p)
            assert len(names) == len(units)
