"""File formats: composite CSV, potential-outcome CSV, JSON specs and reports.

CSV for tabular data, JSON for everything structured; UTF-8 throughout; a
blank CSV field means structurally missing. All writes go through a
temp-file-plus-rename so readers never observe a torn file.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import MISSING, CompositeDataset
from .errors import ValidationError
from .graphs import CausalGraph
from .scm import PotentialOutcomeDataset, ScmSpec


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}"
        ) from exc


def _fmt(v: float) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# Composite analysis data


def composite_csv_text(data: CompositeDataset) -> str:
    k = data.n_covariates
    with_flag = bool(np.any(data.control != 0))
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["id"] + [f"x{j + 1}" for j in range(k)] + ["s", "a", "y"]
    if with_flag:
        header.append("c")
    w.writerow(header)
    for i in range(data.n):
        row = [int(data.ids[i])]
        row += [_fmt(data.x[i, j]) for j in range(k)]
        row.append(int(data.s[i]))
        row.append("" if data.a[i] == MISSING else int(data.a[i]))
        row.append("" if data.y[i] == MISSING else int(data.y[i]))
        if with_flag:
            row.append(int(data.control[i]))
        w.writerow(row)
    return buf.getvalue()


def write_composite_csv(path, data: CompositeDataset) -> None:
    atomic_write_text(path, composite_csv_text(data))


def _parse_binary(raw: str, line: int, col: str, *, allow_blank: bool) -> int:
    raw = raw.strip()
    if raw == "":
        if allow_blank:
            return MISSING
        raise ValidationError(f"line {line}: column {col!r} must not be blank")
    if raw not in ("0", "1"):
        raise ValidationError(
            f"line {line}: column {col!r} must be 0 or 1, got {raw!r}")
    return int(raw)


def parse_composite_csv(path, design: str = "nested") -> CompositeDataset:
    """Read the analysis CSV (columns id, x1..xk, s, a, y and optional c).

    Blank a/y cells are the structural missingness of target rows; they are
    rejected on trial rows, and filled a/y cells are rejected on target rows
    unless the row carries the control-outcome flag.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        with_flag = header[-1:] == ["c"]
        core = header[:-1] if with_flag else header
        if len(core) < 5 or core[0] != "id" or core[-3:] != ["s", "a", "y"]:
            raise ValidationError(
                f"{path}: header must be id,x1..xk,s,a,y with optional trailing "
                f"c column, got {','.join(header)}")
        x_names = core[1:-3]
        for j, name in enumerate(x_names):
            if name != f"x{j + 1}":
                raise ValidationError(
                    f"{path}: covariate column {j + 2} must be named x{j + 1}, "
                    f"got {name!r}")
        k = len(x_names)
        ids, xs, ss, aa, yy, cc = [], [], [], [], [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValidationError(
                    f"line {line_no}: expected {len(header)} fields, got {len(row)}")
            try:
                ids.append(int(row[0]))
            except ValueError:
                raise ValidationError(
                    f"line {line_no}: column 'id' must be an integer, "
                    f"got {row[0]!r}") from None
            try:
                xs.append([float(row[1 + j]) for j in range(k)])
            except ValueError:
                raise ValidationError(
                    f"line {line_no}: covariate columns must be numeric") from None
            s = _parse_binary(row[1 + k], line_no, "s", allow_blank=False)
            a = _parse_binary(row[2 + k], line_no, "a", allow_blank=True)
            y = _parse_binary(row[3 + k], line_no, "y", allow_blank=True)
            c = (_parse_binary(row[4 + k], line_no, "c", allow_blank=True)
                 if with_flag else 0)
            ss.append(s)
            aa.append(a)
            yy.append(y)
            cc.append(0 if c == MISSING else c)
    if not ids:
        raise ValidationError(f"{path}: no data rows")
    return CompositeDataset.make(ids, np.asarray(xs), ss, aa, yy, cc, design)


# ---------------------------------------------------------------------------
# Potential-outcome data (simulation output, verification only)

POD_TAIL = ["u", "v", "s", "a0", "a1", "a", "y00", "y01", "y10", "y11", "y"]


def pod_csv_text(pod: PotentialOutcomeDataset) -> str:
    xv = pod.x_values
    k = xv.shape[1]
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id"] + [f"x{j + 1}" for j in range(k)] + POD_TAIL)
    cols = (pod.u, pod.v, pod.s, pod.a_s0, pod.a_s1, pod.a,
            pod.y00, pod.y01, pod.y10, pod.y11, pod.y)
    for i in range(pod.n):
        row = [int(pod.ids[i])] + [_fmt(xv[i, j]) for j in range(k)]
        row += [int(c[i]) for c in cols]
        w.writerow(row)
    return buf.getvalue()


def write_pod_csv(path, pod: PotentialOutcomeDataset) -> None:
    atomic_write_text(path, pod_csv_text(pod))


@dataclass(frozen=True)
class _PodSpecView:
    x_values: np.ndarray


@dataclass(frozen=True)
class PodView:
    """Potential-outcome columns reloaded from CSV.

    Carries exactly what the diagnostics need (covariate strata and the four
    potential-outcome columns); the generative law itself is not recoverable
    from data and is not pretended to be.
    """

    spec: _PodSpecView
    ids: np.ndarray
    x_index: np.ndarray
    u: np.ndarray
    v: np.ndarray
    s: np.ndarray
    a_s0: np.ndarray
    a_s1: np.ndarray
    a: np.ndarray
    y00: np.ndarray
    y01: np.ndarray
    y10: np.ndarray
    y11: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ids)


def read_pod_csv(path) -> PodView:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        if (len(header) < 1 + 1 + len(POD_TAIL) or header[0] != "id"
                or header[-len(POD_TAIL):] != POD_TAIL):
            raise ValidationError(
                f"{path}: header must be id,x1..xk,{','.join(POD_TAIL)}")
        k = len(header) - 1 - len(POD_TAIL)
        ids, xs, rest = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValidationError(
                    f"line {line_no}: expected {len(header)} fields, got {len(row)}")
            try:
                ids.append(int(row[0]))
                xs.append([float(row[1 + j]) for j in range(k)])
                rest.append([int(v) for v in row[1 + k:]])
            except ValueError:
                raise ValidationError(
                    f"line {line_no}: non-numeric field in potential-outcome "
                    "data") from None
    if not ids:
        raise ValidationError(f"{path}: no data rows")
    x = np.asarray(xs, dtype=np.float64)
    x_values, x_index = np.unique(x, axis=0, return_inverse=True)
    cols = np.asarray(rest, dtype=np.int8).T
    u, v, s, a0, a1, a, y00, y01, y10, y11, y = cols
    return PodView(_PodSpecView(x_values), np.asarray(ids, dtype=np.int64),
                   np.ravel(x_index).astype(np.int64), u, v, s, a0, a1, a,
                   y00, y01, y10, y11, y)


# ---------------------------------------------------------------------------
# Plot-ready CSVs and structured specs


def plot_csv_text(rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stratum", "metric", "value", "se"])
    for stratum, metric, value, se in rows:
        w.writerow([stratum, metric, _fmt(value),
                    "" if np.isnan(se) else _fmt(se)])
    return buf.getvalue()


def replicates_csv_text(estimates) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replicate", "estimate"])
    for r, est in enumerate(estimates):
        w.writerow([r, _fmt(est)])
    return buf.getvalue()


def read_graph_json(path) -> CausalGraph:
    return CausalGraph.from_obj(read_json(path))


def read_scm_json(path) -> ScmSpec:
    return ScmSpec.from_obj(read_json(path))


def read_estimate_config(path) -> dict:
    """Config for the estimate subcommand.

    Shape: {"estimator": name, "options": {...}, "bootstrap": {"n_replicates",
    "level", "seed"}}; options entries ending in _design are design specs.
    """
    obj = read_json(path)
    if not isinstance(obj, dict):
        raise ValidationError("estimate config must be a JSON object")
    if "estimator" not in obj:
        raise ValidationError("estimate config is missing the 'estimator' field")
    unknown = set(obj) - {"estimator", "options", "bootstrap"}
    if unknown:
        raise ValidationError(
            f"estimate config has unknown fields: {sorted(unknown)}")
    boot = obj.get("bootstrap")
    if boot is not None:
        if not isinstance(boot, dict) or "seed" not in boot:
            raise ValidationError("bootstrap config must be an object with a seed")
    return obj
