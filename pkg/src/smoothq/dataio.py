"""CSV ingestion and emission.

Input files carry a header row and numeric cells; the selected response
column becomes y and the remaining columns, in header order, become the
covariates (an intercept column is prepended automatically).  Parse errors
point at the offending file row and column.  Output uses 17 significant
digits so a written dataset re-ingests bit-for-bit.
"""

import csv

import numpy as np

from .objective import Dataset

FLOAT_FMT = "%.17g"


class IngestError(ValueError):
    """Malformed input data; the message locates the problem."""


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as err:
        raise IngestError(f"could not read {path}: {err.strerror}") from err
    while rows and all(cell.strip() == "" for cell in rows[-1]):
        rows.pop()
    return rows


def csv_headers(path) -> list:
    """Header names of a CSV file (first row)."""
    rows = _read_rows(path)
    if not rows:
        raise IngestError(f"{path}: file is empty")
    return [h.strip() for h in rows[0]]


def ingest_csv(path, response: str) -> Dataset:
    """Read a CSV into a Dataset, using column ``response`` as y."""
    rows = _read_rows(path)
    if not rows:
        raise IngestError(f"{path}: file is empty")
    headers = [h.strip() for h in rows[0]]
    seen = set()
    for name in headers:
        if name in seen:
            raise IngestError(f"{path}: duplicate header {name!r}")
        seen.add(name)
    if response not in headers:
        raise IngestError(
            f"{path}: response column {response!r} not found; "
            f"available: {', '.join(headers)}")
    if len(headers) < 2:
        raise IngestError(f"{path}: need at least one covariate column")
    if len(rows) < 2:
        raise IngestError(f"{path}: no data rows")

    y_col = headers.index(response)
    n = len(rows) - 1
    values = np.empty((n, len(headers)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(headers):
            raise IngestError(
                f"{path}: row {i} has {len(row)} cells, expected {len(headers)}")
        for j, cell in enumerate(row):
            try:
                values[i - 2, j] = float(cell)
            except ValueError:
                raise IngestError(
                    f"{path}: row {i}, column {headers[j]!r}: "
                    f"could not parse {cell.strip()!r} as a number") from None
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise IngestError(
            f"{path}: row {bad[0] + 2}, column {headers[bad[1]]!r}: "
            f"value is not finite")

    y = values[:, y_col]
    x = np.delete(values, y_col, axis=1)
    X = np.column_stack([np.ones(n), x])
    return Dataset.from_arrays(y, X)


def covariate_names(path, response: str) -> list:
    """Headers in ingest order with the response removed."""
    return [h for h in csv_headers(path) if h != response]


def write_dataset_csv(path, data: Dataset, response: str = "y",
                      names: list = None):
    """Write y plus the non-intercept covariates; round-trips exactly."""
    X = data.X
    p = X.shape[1] - 1
    if names is None:
        names = [f"x{j}" for j in range(1, p + 1)]
    if len(names) != p:
        raise ValueError(f"need {p} covariate names, got {len(names)}")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([response] + list(names))
        for i in range(data.n):
            writer.writerow([FLOAT_FMT % data.y[i]]
                            + [FLOAT_FMT % v for v in X[i, 1:]])


def emit_plot_data(rows, path):
    """Write long-format plot rows (x, series, metric, value) to CSV.

    The column order is fixed; an empty iterable yields a header-only file.
    """
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "series", "metric", "value"])
        for x, series, metric, value in rows:
            writer.writerow([FLOAT_FMT % float(x), series, metric,
                             FLOAT_FMT % float(value)])


def read_plot_data(path) -> list:
    """Inverse of emit_plot_data: list of (x, series, metric, value)."""
    rows = _read_rows(path)
    if not rows or rows[0] != ["x", "series", "metric", "value"]:
        raise IngestError(f"{path}: not a plot-data file")
    return [(float(r[0]), r[1], r[2], float(r[3])) for r in rows[1:]]
