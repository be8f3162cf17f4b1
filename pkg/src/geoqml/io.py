"""File formats: CSV matrices/states/datasets, key-value configs, JSON reports.

Every CSV starts with a comment header naming its schema, for example::

    # spd dim=3 schema_version=1
    # subspace n=5 k=2 schema_version=1
    # state qubits=2 schema_version=1          (rows: real,imag)
    # matrix rows=4 cols=4 kind=distances schema_version=1
    # dataset task=regression features=7 targets=32 schema_version=1

Dataset CSVs follow the header with a column-name row: feature columns
``x0..x{d-1}`` then target columns ``y0..y{k-1}`` (or a single ``label``).

Config files are ``key = value`` lines; ``#`` starts a comment; values are
parsed as int, float, comma-separated list, or left as strings.
"""

import contextlib
import json
import re

import numpy as np

from .exceptions import ParseError

SCHEMA_VERSION = 1

_HEADER_RE = re.compile(r"^#\s*(\w+)((?:\s+\w+=\S+)*)\s*$")


def _parse_header(line, expected_kind):
    m = _HEADER_RE.match(line.strip())
    if not m or m.group(1) != expected_kind:
        raise ParseError(f"expected a '# {expected_kind} ...' header, got {line.strip()!r}", 1)
    fields = dict(kv.split("=", 1) for kv in m.group(2).split())
    version = fields.get("schema_version", str(SCHEMA_VERSION))
    if version != str(SCHEMA_VERSION):
        raise ParseError(f"unsupported schema_version {version}", 1)
    return fields


def _int_field(fields, key):
    try:
        value = int(fields[key])
    except (KeyError, ValueError):
        raise ParseError(f"header needs an integer '{key}=' field", 1) from None
    if value < 1:
        raise ParseError(f"header field {key} must be >= 1", 1)
    return value


def _read_rows(lines, n_cols, first_lineno):
    rows = []
    for offset, line in enumerate(lines):
        lineno = first_lineno + offset
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        try:
            row = [float(tok) for tok in text.split(",")]
        except ValueError:
            raise ParseError(f"non-numeric entry in {text!r}", lineno) from None
        if len(row) != n_cols:
            raise ParseError(f"expected {n_cols} columns, got {len(row)}", lineno)
        rows.append(row)
    return np.array(rows, dtype=float).reshape(-1, n_cols)


def _read_lines(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file", 1)
    return lines


@contextlib.contextmanager
def _open_out(target):
    """Yield a writable handle for a path or an already-open file object."""
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w") as fh:
            yield fh


def _fmt(x):
    return repr(float(x))


def _write_matrix_body(fh, M):
    for row in np.atleast_2d(M):
        fh.write(",".join(_fmt(v) for v in row) + "\n")


# --------------------------------------------------------------------------
# SPD matrices and subspaces

def read_spd_csv(path):
    """Read an SPD matrix file; symmetry/definiteness is left to the caller."""
    lines = _read_lines(path)
    dim = _int_field(_parse_header(lines[0], "spd"), "dim")
    M = _read_rows(lines[1:], dim, 2)
    if M.shape[0] != dim:
        raise ParseError(f"expected {dim} rows, got {M.shape[0]}")
    return M


def write_spd_csv(path, P):
    P = np.asarray(P, dtype=float)
    with _open_out(path) as fh:
        fh.write(f"# spd dim={P.shape[0]} schema_version={SCHEMA_VERSION}\n")
        _write_matrix_body(fh, P)


def read_subspace_csv(path):
    lines = _read_lines(path)
    fields = _parse_header(lines[0], "subspace")
    n, k = _int_field(fields, "n"), _int_field(fields, "k")
    X = _read_rows(lines[1:], k, 2)
    if X.shape[0] != n:
        raise ParseError(f"expected {n} rows, got {X.shape[0]}")
    return X


def write_subspace_csv(path, X):
    X = np.asarray(X, dtype=float)
    with _open_out(path) as fh:
        fh.write(f"# subspace n={X.shape[0]} k={X.shape[1]} schema_version={SCHEMA_VERSION}\n")
        _write_matrix_body(fh, X)


def write_matrix_csv(path, M, kind="matrix", **extra):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    tags = "".join(f" {k}={v}" for k, v in extra.items())
    with _open_out(path) as fh:
        fh.write(f"# matrix rows={M.shape[0]} cols={M.shape[1]} kind={kind}{tags} "
                 f"schema_version={SCHEMA_VERSION}\n")
        _write_matrix_body(fh, M)


def read_matrix_csv(path):
    lines = _read_lines(path)
    fields = _parse_header(lines[0], "matrix")
    rows, cols = _int_field(fields, "rows"), _int_field(fields, "cols")
    M = _read_rows(lines[1:], cols, 2)
    if M.shape[0] != rows:
        raise ParseError(f"expected {rows} rows, got {M.shape[0]}")
    return M


# --------------------------------------------------------------------------
# states

def read_state_csv(path):
    lines = _read_lines(path)
    n = int(_parse_header(lines[0], "state").get("qubits", -1))
    if n < 0:
        raise ParseError("state header needs 'qubits='", 1)
    pairs = _read_rows(lines[1:], 2, 2)
    if pairs.shape[0] != 1 << n:
        raise ParseError(f"expected {1 << n} amplitude rows, got {pairs.shape[0]}")
    return pairs[:, 0] + 1j * pairs[:, 1]


def write_state_csv(path, psi):
    psi = np.asarray(psi, dtype=complex)
    n = psi.size.bit_length() - 1
    with _open_out(path) as fh:
        fh.write(f"# state qubits={n} schema_version={SCHEMA_VERSION}\n")
        for a in psi:
            fh.write(f"{_fmt(a.real)},{_fmt(a.imag)}\n")


# --------------------------------------------------------------------------
# datasets

def write_dataset_csv(path, dataset):
    X = dataset.features
    if dataset.task == "classification":
        names = [f"x{i}" for i in range(X.shape[1])] + ["label"]
        body = np.hstack([X, dataset.targets[:, None].astype(float)])
        n_targets = 1
    else:
        names = [f"x{i}" for i in range(X.shape[1])] + \
                [f"y{j}" for j in range(dataset.targets.shape[1])]
        body = np.hstack([X, dataset.targets])
        n_targets = dataset.targets.shape[1]
    with _open_out(path) as fh:
        fh.write(f"# dataset task={dataset.task} features={X.shape[1]} targets={n_targets} "
                 f"schema_version={SCHEMA_VERSION}\n")
        fh.write(",".join(names) + "\n")
        _write_matrix_body(fh, body)


def read_dataset_csv(path, split="train"):
    from .pipeline import Dataset

    lines = _read_lines(path)
    fields = _parse_header(lines[0], "dataset")
    task = fields.get("task", "regression")
    d = _int_field(fields, "features")
    k = _int_field(fields, "targets")
    if len(lines) < 2:
        raise ParseError("missing column-name row", 2)
    names = [c.strip() for c in lines[1].split(",")]
    expected = [f"x{i}" for i in range(d)] + \
               (["label"] if task == "classification" else [f"y{j}" for j in range(k)])
    if names != expected:
        raise ParseError(f"column names do not match header (expected {expected[:3]}...)", 2)
    body = _read_rows(lines[2:], d + k, 3)
    X, Y = body[:, :d], body[:, d:]
    if task == "classification":
        return Dataset(X, Y[:, 0].astype(np.int64), split, task)
    return Dataset(X, Y, split, task)


# --------------------------------------------------------------------------
# configs and reports

def _parse_value(text):
    text = text.strip()
    if "," in text:
        return [_parse_value(t) for t in text.split(",") if t.strip()]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def parse_config(text):
    """Parse ``key = value`` lines into a dict (later keys override earlier ones)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", key):
            raise ParseError(f"invalid key {key!r}", lineno)
        if not value:
            raise ParseError(f"missing value for {key!r}", lineno)
        out[key] = _parse_value(value)
    return out


def format_config(config):
    lines = []
    for key, value in config.items():
        if isinstance(value, (list, tuple)):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def dumps_report(report):
    """Serialize with a stable key order; ``loads`` then ``dumps`` is byte-identical."""
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def write_report(path, report):
    text = dumps_report(report)
    with open(path, "w") as fh:
        fh.write(text)
    return text


def read_report(path):
    with open(path) as fh:
        return json.load(fh)
