import json

import numpy as np
import pytest

from smoothq.cli import build_parser, config_from_args, main
from smoothq.dataio import (IngestError, csv_headers, emit_plot_data,
                            ingest_csv, read_plot_data, write_dataset_csv)
from smoothq.objective import Dataset
from smoothq.rng import make_generator


def _write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def _toy_dataset(gen, n=30, d=4):
    X = np.column_stack([np.ones(n), gen.standard_normal((n, d - 1))])
    beta = np.zeros(d)
    beta[:2] = [0.5, 1.0]
    y = X @ beta + 0.3 * gen.standard_normal(n)
    return Dataset.from_arrays(y, X)


# ---------------------------------------------------------------- data I/O


def test_dataset_csv_round_trip_is_bitwise(tmp_path):
    gen = make_generator(113)
    data = _toy_dataset(gen)
    path = tmp_path / "data.csv"
    write_dataset_csv(path, data, response="y")
    again = ingest_csv(str(path), response="y")
    assert np.array_equal(again.y, data.y)
    assert np.array_equal(again.X, data.X)


def test_ingest_duplicate_header(tmp_path):
    path = _write_csv(tmp_path / "d.csv", "y,x1,x1\n1,2,3\n")
    with pytest.raises(IngestError, match="duplicate"):
        ingest_csv(path, response="y")


def test_ingest_missing_response_names_headers(tmp_path):
    path = _write_csv(tmp_path / "d.csv", "a,b\n1,2\n")
    with pytest.raises(IngestError, match="a, b"):
        ingest_csv(path, response="y")


def test_ingest_bad_cell_is_located(tmp_path):
    path = _write_csv(tmp_path / "d.csv", "y,x1\n1,2\n3,oops\n")
    with pytest.raises(IngestError, match=r"row 3.*'x1'.*'oops'"):
        ingest_csv(path, response="y")


def test_ingest_short_row(tmp_path):
    path = _write_csv(tmp_path / "d.csv", "y,x1,x2\n1,2,3\n4,5\n")
    with pytest.raises(IngestError, match="row 3"):
        ingest_csv(path, response="y")


def test_ingest_tolerates_trailing_blank_lines(tmp_path):
    path = _write_csv(tmp_path / "d.csv", "y,x1\n1,2\n3,4\n\n\n")
    data = ingest_csv(path, response="y")
    assert data.n == 2


def test_ingest_nonfinite_rejected(tmp_path):
    path = _write_csv(tmp_path / "d.csv", "y,x1\n1,2\ninf,4\n")
    with pytest.raises(IngestError, match="finite"):
        ingest_csv(path, response="y")


def test_csv_headers(tmp_path):
    path = _write_csv(tmp_path / "d.csv", "y,x1,x2\n1,2,3\n")
    assert csv_headers(path) == ["y", "x1", "x2"]


def test_plot_data_round_trip(tmp_path):
    rows = [(0.1, "curve", "loss", 1.5), (0.2, "curve", "loss", 1.25)]
    path = tmp_path / "p.csv"
    emit_plot_data(rows, path)
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == "x,series,metric,value"
    back = read_plot_data(path)
    assert len(back) == 2
    assert back[0][0] == 0.1 and back[0][1] == "curve"

    emit_plot_data([], tmp_path / "empty.csv")
    assert (tmp_path / "empty.csv").read_text(
        encoding="utf-8").strip() == "x,series,metric,value"
    assert read_plot_data(tmp_path / "empty.csv") == []


# ---------------------------------------------------------------- parsing


def test_parser_defaults():
    args = build_parser().parse_args(["fit", "data.csv", "--lambda", "0.1"])
    config = config_from_args(args)
    assert config.tau == 0.5
    assert config.kernel == "gaussian"
    assert config.penalty == "lasso"
    assert config.fmt == "json"
    assert config.figures is True
    assert config.lam == 0.1

    args_cv = build_parser().parse_args(["cv", "data.csv"])
    config_cv = config_from_args(args_cv)
    assert config_cv.folds == 10
    assert config_cv.n_lambda == 50
    assert config_cv.min_ratio == 0.01


def test_parser_penalty_name_normalization():
    args = build_parser().parse_args(
        ["cv", "d.csv", "--penalty", "group-lasso", "--groups", "2,3"])
    config = config_from_args(args)
    assert config.penalty == "group_lasso"
    assert config.groups == (2, 3)


def test_config_conflicts_exit_2(tmp_path, capsys):
    # argparse enforces the mandatory flags itself
    with pytest.raises(SystemExit) as info:
        main(["fit", "whatever.csv"])  # fit needs a penalty level
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--design", "sparse"])  # needs --n/--p/--reps
    assert info.value.code == 2
    # cross-flag conflicts are caught by configuration validation
    # group penalty needs group sizes
    assert main(["cv", "whatever.csv", "--penalty", "group_lasso"]) == 2
    # plain lasso cannot take groups
    assert main(["cv", "whatever.csv", "--groups", "2,2"]) == 2
    err = capsys.readouterr().err
    assert "error:" in err


def test_missing_input_file_exits_1(tmp_path, capsys):
    missing = str(tmp_path / "nope.csv")
    assert main(["fit", missing, "--lambda", "0.1"]) == 1
    err = capsys.readouterr().err
    assert "error:" in err and "could not read" in err


# ---------------------------------------------------------------- commands


def _fit_args(tmp_path, data_path, extra=()):
    out = tmp_path / "fit.json"
    return ["fit", data_path, "--lambda", "0.05",
            "--output", str(out), "--no-figures", *extra], out


def test_cli_fit_writes_json(tmp_path):
    gen = make_generator(115)
    data = _toy_dataset(gen)
    data_path = str(tmp_path / "data.csv")
    write_dataset_csv(data_path, data, response="y")
    argv, out = _fit_args(tmp_path, data_path)
    assert main(argv) == 0
    result = json.loads(out.read_text(encoding="utf-8"))
    assert len(result["coefficients"]) == data.dim
    assert result["lambda"] == 0.05
    assert result["tau"] == 0.5
    assert result["kernel"] == "gaussian"
    assert result["converged"] is True


def test_cli_fit_csv_format(tmp_path):
    gen = make_generator(117)
    data = _toy_dataset(gen)
    data_path = str(tmp_path / "data.csv")
    write_dataset_csv(data_path, data, response="y")
    out = tmp_path / "fit.csv"
    argv = ["fit", data_path, "--lambda", "0.05", "--output", str(out),
            "--format", "csv", "--no-figures"]
    assert main(argv) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "name,value"
    assert lines[1].startswith("intercept,")
    assert len(lines) == 1 + data.dim


def test_cli_fit_at_lambda_max_zeroes_tail(tmp_path):
    gen = make_generator(119)
    data = _toy_dataset(gen, n=40, d=5)
    data_path = str(tmp_path / "data.csv")
    write_dataset_csv(data_path, data, response="y")

    from smoothq.kernels import SmoothingSpec, default_bandwidth
    from smoothq.penalties import PenaltyTemplate
    from smoothq.tuning import lambda_max
    h = default_bandwidth(data.n, data.dim - 1, 0.5)
    lam_max = lambda_max(data, SmoothingSpec(tau=0.5, h=h),
                         PenaltyTemplate("lasso"))

    out = tmp_path / "fit.json"
    argv = ["fit", data_path, "--lambda", f"{lam_max:.17g}",
            "--output", str(out), "--no-figures"]
    assert main(argv) == 0
    result = json.loads(out.read_text(encoding="utf-8"))
    coef = np.asarray(result["coefficients"])
    assert np.all(coef[1:] == 0.0)


def test_cli_cv_outputs_curve_and_plot_data(tmp_path):
    gen = make_generator(121)
    data = _toy_dataset(gen, n=40)
    data_path = str(tmp_path / "data.csv")
    write_dataset_csv(data_path, data, response="y")
    out = tmp_path / "cv.json"
    argv = ["cv", data_path, "--folds", "4", "--nlambda", "8",
            "--lambda-min-ratio", "0.05", "--seed", "3",
            "--output", str(out)]
    assert main(argv) == 0
    result = json.loads(out.read_text(encoding="utf-8"))
    # the JSON carries the selected model; the curve goes to the plot file
    assert len(result["coefficients"]) == data.dim
    assert 0 <= result["selected_index"] < 8
    assert result["folds"] == 4

    plot_csv = tmp_path / "cv_plot.csv"
    assert plot_csv.exists()
    rows = read_plot_data(plot_csv)
    metrics = {r[2] for r in rows}
    assert metrics == {"mean_loss", "se_loss"}
    assert len(rows) == 16
    lambdas = sorted({r[0] for r in rows})
    assert len(lambdas) == 8
    assert result["lambda"] in lambdas
    assert (tmp_path / "cv.png").exists()


def test_cli_cv_no_figures_skips_png(tmp_path):
    gen = make_generator(123)
    data = _toy_dataset(gen, n=30)
    data_path = str(tmp_path / "data.csv")
    write_dataset_csv(data_path, data, response="y")
    out = tmp_path / "cv.json"
    argv = ["cv", data_path, "--folds", "3", "--nlambda", "5",
            "--lambda-min-ratio", "0.05", "--output", str(out),
            "--no-figures"]
    assert main(argv) == 0
    assert (tmp_path / "cv_plot.csv").exists()
    assert not (tmp_path / "cv.png").exists()


def test_cli_flam_outputs_step_data(tmp_path):
    gen = make_generator(125)
    n = 60
    X = gen.uniform(-1, 1, size=(n, 2))
    y = 1.0 + np.where(X[:, 0] > 0, 1.0, -1.0) + 0.1 * gen.standard_normal(n)
    rows = np.column_stack([y, X])
    lines = ["y,x1,x2"]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    data_path = _write_csv(tmp_path / "data.csv", "\n".join(lines) + "\n")

    out = tmp_path / "flam.json"
    argv = ["flam", data_path, "--lambda", "0.05", "--output", str(out)]
    assert main(argv) == 0
    result = json.loads(out.read_text(encoding="utf-8"))
    assert "theta0" in result and result["converged"] is True

    plot_rows = read_plot_data(tmp_path / "flam_plot.csv")
    by_series = {}
    for x, series, metric, value in plot_rows:
        assert metric == "theta"
        by_series.setdefault(series, []).append(x)
    assert set(by_series) == {"x1", "x2"}
    for xs in by_series.values():
        assert len(xs) == n
        assert xs == sorted(xs)
    assert (tmp_path / "flam.png").exists()


def test_cli_simulate_deterministic(tmp_path):
    out1 = tmp_path / "sim1.json"
    out2 = tmp_path / "sim2.json"
    base = ["simulate", "--design", "sparse", "--n", "80", "--p", "19",
            "--reps", "2", "--folds", "3", "--nlambda", "6",
            "--lambda-min-ratio", "0.05", "--seed", "4", "--no-figures"]
    assert main(base + ["--output", str(out1)]) == 0
    assert main(base + ["--output", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    result = json.loads(out1.read_text(encoding="utf-8"))
    assert result["reps"] == 2
    assert "l2_error" in result["metrics"]["mean"]
    assert result["metrics"]["se"]["l2_error"] is not None
    # per-replication values land in the plot file, one x per replication
    rows = read_plot_data(tmp_path / "sim1_plot.csv")
    reps_seen = sorted({r[0] for r in rows})
    assert reps_seen == [0.0, 1.0]


def test_cli_bench_row_cardinality(tmp_path):
    out = tmp_path / "bench.json"
    argv = ["bench", "--sizes", "20,24", "--reps", "1", "--folds", "3",
            "--nlambda", "4", "--lambda-min-ratio", "0.1", "--seed", "5",
            "--output", str(out), "--no-figures"]
    assert main(argv) == 0
    result = json.loads(out.read_text(encoding="utf-8"))
    assert [entry["p"] for entry in result["curve"]] == [20, 24]
    for entry in result["curve"]:
        assert entry["n"] == 2 * entry["p"]
        assert entry["seconds"] > 0.0
        assert "l2_error" in entry
    rows = read_plot_data(tmp_path / "bench_plot.csv")
    assert {r[2] for r in rows} == {"l2_error", "seconds"}
    assert len(rows) == 4
