"""Text formats: matrices, directions, event logs, frequency tables,
direction designs, moment lists, schedules and reports.

Reals are written with 17 significant digits, which round-trips IEEE
doubles exactly.
"""
import hashlib
from pathlib import Path

import numpy as np

from .errors import FormatError, NotUnit
from .experiment import EventLog, ExperimentConfig, FrequencyTable, KINDS
from .projectors import OUTCOMES
from .spin import direction


def fmt(x):
    return "%.17g" % x


def format_matrix(M):
    M = np.asarray(M, dtype=complex)
    lines = [f"matrix dim={M.shape[0]}"]
    for row in M:
        lines.append(" ".join(f"{fmt(z.real)},{fmt(z.imag)}" for z in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text, first_line=1):
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty matrix file", first_line)
    head = lines[0].strip()
    if not head.startswith("matrix dim="):
        raise FormatError(f"expected 'matrix dim=<d>', got {head!r}", first_line)
    try:
        dim = int(head[len("matrix dim="):])
    except ValueError:
        raise FormatError(f"bad dimension in {head!r}", first_line) from None
    if dim < 1:
        raise FormatError("dimension must be positive", first_line)
    rows = [ln for ln in lines[1:1 + dim]]
    if len(rows) < dim:
        raise FormatError(f"matrix has {len(rows)} rows, expected {dim}", first_line + len(rows))
    M = np.empty((dim, dim), dtype=complex)
    for i, row in enumerate(rows):
        lineno = first_line + 1 + i
        entries = row.split(" ")
        if len(entries) != dim:
            raise FormatError(f"row has {len(entries)} entries, expected {dim}", lineno)
        for j, entry in enumerate(entries):
            try:
                re, im = entry.split(",")
                M[i, j] = complex(float(re), float(im))
            except ValueError:
                raise FormatError(f"bad entry {entry!r}", lineno) from None
    extra = [ln for ln in lines[1 + dim:] if ln.strip()]
    if extra:
        raise FormatError("trailing content after matrix rows", first_line + 1 + dim)
    if not np.all(np.isfinite(M)):
        raise FormatError("matrix has non-finite entries", first_line)
    return M


def write_matrix(path, M):
    Path(path).write_text(format_matrix(M))


def read_matrix(path):
    return parse_matrix(Path(path).read_text())


def format_direction(v):
    return ",".join(fmt(x) for x in np.asarray(v, dtype=float))


def parse_direction(text):
    """Parse ``x,y,z``; raises NotUnit for non-unit vectors, ValueError for junk."""
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"direction needs three comma-separated components, got {text!r}")
    return direction([float(p) for p in parts])


# event logs

def format_event_log(log):
    c = log.config
    lines = [f"# kind={c.kind}", f"# N={c.n_events}", f"# seed={c.seed}", f"# a={format_direction(c.a)}"]
    if c.b is not None:
        lines.append(f"# b={format_direction(c.b)}")
    lines.append(f"# chunk={c.chunk}")
    ev = np.asarray(log.events)
    if c.paired:
        body = "\n".join(f"{k} {l}" for k, l in ev.tolist())
    else:
        body = "\n".join(str(k) for k in ev.tolist())
    return "\n".join(lines) + "\n" + body + ("\n" if body else "")


def write_event_log(path, log):
    Path(path).write_text(format_event_log(log))


def _header(lines):
    meta = {}
    n = 0
    for n, ln in enumerate(lines):
        if not ln.startswith("#"):
            return meta, n
        key, sep, value = ln[1:].strip().partition("=")
        if not sep:
            raise FormatError(f"bad header line {ln!r}", n + 1)
        meta[key.strip()] = value.strip()
    return meta, len(lines)


def read_event_log(path):
    lines = Path(path).read_text().splitlines()
    meta, start = _header(lines)
    for key in ("kind", "N", "seed", "a"):
        if key not in meta:
            raise FormatError(f"missing header '# {key}='", start + 1)
    kind = meta["kind"]
    if kind not in KINDS:
        raise FormatError(f"unknown kind {kind!r}", 1)
    try:
        config = ExperimentConfig(
            kind,
            parse_direction(meta["a"]),
            parse_direction(meta["b"]) if "b" in meta else None,
            int(meta["N"]),
            int(meta["seed"]),
            int(meta.get("chunk", "1")),
        )
    except (ValueError, NotUnit) as exc:
        raise FormatError(f"bad header: {exc}", 1) from None
    width = 2 if config.paired else 1
    events = []
    for i, ln in enumerate(lines[start:], start=start + 1):
        if not ln.strip():
            continue
        parts = ln.split()
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise FormatError(f"bad event {ln!r}", i) from None
        if len(vals) != width or any(v not in OUTCOMES for v in vals):
            raise FormatError(f"bad event {ln!r}", i)
        events.append(vals if width == 2 else vals[0])
    if len(events) != config.n_events:
        raise FormatError(f"header says N={config.n_events} but file has {len(events)} events", len(lines))
    return EventLog(config, np.array(events, dtype=np.int8).reshape((-1, 2) if width == 2 else (-1,)))


# pair frequency tables (separability datasets)

def format_pair_table(a, b, table):
    lines = [f"# a={format_direction(a)}", f"# b={format_direction(b)}"]
    for i, k in enumerate(OUTCOMES):
        for j, l in enumerate(OUTCOMES):
            lines.append(f"{k} {l} {fmt(float(table.values[i, j]))}")
    return "\n".join(lines) + "\n"


def read_pair_table(path):
    lines = Path(path).read_text().splitlines()
    meta, start = _header(lines)
    if "a" not in meta or "b" not in meta:
        raise FormatError("frequency table needs '# a=' and '# b=' headers", 1)
    try:
        a, b = parse_direction(meta["a"]), parse_direction(meta["b"])
    except (ValueError, NotUnit) as exc:
        raise FormatError(f"bad direction: {exc}", 1) from None
    values = np.full((3, 3), np.nan)
    for i, ln in enumerate(lines[start:], start=start + 1):
        if not ln.strip():
            continue
        try:
            k, l, f = ln.split()
            values[OUTCOMES.index(int(k)), OUTCOMES.index(int(l))] = float(f)
        except ValueError:
            raise FormatError(f"bad table row {ln!r}", i) from None
    if np.any(np.isnan(values)):
        raise FormatError("table does not list all 9 outcome pairs", len(lines))
    return (a, b), FrequencyTable(values)


def read_dataset(directory):
    files = sorted(p for p in Path(directory).iterdir() if p.is_file())
    if not files:
        raise FormatError(f"no frequency tables in {directory}")
    return [read_pair_table(p) for p in files]


# tomography inputs

def read_design(path):
    dirs = []
    for i, ln in enumerate(Path(path).read_text().splitlines(), start=1):
        if not ln.strip() or ln.startswith("#"):
            continue
        try:
            dirs.append(parse_direction(ln.strip()))
        except (ValueError, NotUnit) as exc:
            raise FormatError(str(exc), i) from None
    return dirs


def read_moments(path):
    rows = []
    for i, ln in enumerate(Path(path).read_text().splitlines(), start=1):
        if not ln.strip() or ln.startswith("#"):
            continue
        try:
            m1, m2 = (float(x) for x in ln.split())
        except ValueError:
            raise FormatError(f"expected 'm1 m2', got {ln!r}", i) from None
        rows.append((m1, m2))
    return rows


# schedules

def format_schedule(lambdas, coefficients):
    lines = [f"schedule n={len(lambdas)}"]
    for lam, row in zip(lambdas, coefficients):
        lines.append(" ".join(fmt(x) for x in [lam, *row]))
    return "\n".join(lines) + "\n"


def read_schedule(path):
    from .dynamics import HamiltonianSchedule

    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("schedule n="):
        raise FormatError("expected 'schedule n=<rows>'", 1)
    try:
        n = int(lines[0][len("schedule n="):])
    except ValueError:
        raise FormatError("bad row count", 1) from None
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        try:
            vals = [float(x) for x in ln.split()]
        except ValueError:
            raise FormatError(f"bad schedule row {ln!r}", i) from None
        if len(vals) != 9:
            raise FormatError(f"schedule row needs 9 numbers, got {len(vals)}", i)
        rows.append(vals)
    if len(rows) != n:
        raise FormatError(f"header says n={n} but file has {len(rows)} rows", len(lines))
    rows = np.array(rows)
    try:
        return HamiltonianSchedule(rows[:, 0], rows[:, 1:])
    except ValueError as exc:
        raise FormatError(str(exc), 2) from None


# reports

def digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def render_report(sections, provenance):
    """Plain-text report: titled sections of ``label = value`` lines, then provenance."""
    out = []
    for title, rows in sections:
        out.append(f"[{title}]")
        for label, value in rows:
            out.append(f"{label} = {fmt(value) if isinstance(value, float) else value}")
        out.append("")
    out.append("[provenance]")
    for label, value in provenance:
        out.append(f"{label} = {value}")
    return "\n".join(out) + "\n"
