"""Command-line driver.

Exit status: 0 on success, 1 on domain errors (invalid or non-PSD sources,
singular designs, degenerate spectra, malformed files), 2 on usage errors.
"""
import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics, experiment, formats, projectors, tomography
from .errors import DomainError, NotUnit

COMMANDS = ("simulate", "freq", "moments", "projectors", "tomography", "separability", "evolve", "report")
_INPUTS = ("source", "in_path", "design", "moments", "dataset", "schedule")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


def _direction_arg(text):
    try:
        return formats.parse_direction(text)
    except NotUnit as exc:
        raise argparse.ArgumentTypeError(f"not a unit vector: {exc}")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return n


def _build_parser():
    parser = _Parser(prog="sepcond", description="Stern-Gerlach / EPRB event simulator and source reconstruction")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="sample an event log from a source matrix")
    p.add_argument("--kind", required=True, choices=experiment.KINDS)
    p.add_argument("--source", required=True, type=Path)
    p.add_argument("--a", required=True, type=_direction_arg)
    p.add_argument("--b", type=_direction_arg)
    p.add_argument("-N", dest="n_events", required=True, type=_positive_int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chunk", type=_positive_int, default=1, help="chunk size for the chunked stream (1 = single stream)")
    p.add_argument("--out", required=True, type=Path)

    for name, what in (("freq", "relative frequencies"), ("moments", "moments")):
        p = sub.add_parser(name, help=f"{what} of an event log")
        p.add_argument("--in", dest="in_path", required=True, type=Path)
        p.add_argument("--out", type=Path)

    p = sub.add_parser("projectors", help="write beam projectors M_+1, M_0, M_-1")
    p.add_argument("--a", required=True, type=_direction_arg)
    p.add_argument("--method", choices=("closed", "lagrange"), default="closed")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("tomography", help="reconstruct a 3x3 source from moments")
    p.add_argument("--design", required=True, type=Path)
    p.add_argument("--moments", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("separability", help="fit one pair source to frequency tables")
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("evolve", help="evolve a source under a Hamiltonian schedule")
    p.add_argument("--source", required=True, type=Path)
    p.add_argument("--schedule", required=True, type=Path)
    p.add_argument("--lambda-max", dest="lambda_max", required=True, type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--every", type=_positive_int, default=1, help="write every n-th grid point")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--report", type=Path)

    p = sub.add_parser("report", help="frequencies, moments and checks for an event log")
    p.add_argument("--in", dest="in_path", required=True, type=Path)
    p.add_argument("--source", type=Path, help="source matrix to compare against")
    p.add_argument("--out", type=Path)
    return parser


def parse_args(argv):
    parser = _build_parser()
    ns = parser.parse_args(list(argv))
    if ns.command is None:
        raise UsageError(parser.format_usage().strip())
    opts = vars(ns)
    command = opts.pop("command")
    if command == "simulate":
        if opts["kind"] == "single-sg" and opts["b"] is not None:
            raise UsageError("simulate: --b is not used with --kind single-sg")
        if opts["kind"] != "single-sg" and opts["b"] is None:
            raise UsageError(f"simulate: --kind {opts['kind']} requires --b")
    if command == "evolve" and opts["lambda_max"] <= 0:
        raise UsageError("evolve: --lambda-max must be positive")
    if command == "evolve" and opts["step"] is not None and opts["step"] <= 0:
        raise UsageError("evolve: --step must be positive")
    for key in _INPUTS:
        path = opts.get(key)
        if path is not None and not path.exists():
            raise UsageError(f"{command}: input path {path} does not exist")
    return RunConfig(command, opts)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _table_text(table):
    vals = np.asarray(table.values)
    if table.paired:
        rows = [f"{k} {l} {formats.fmt(float(vals[i, j]))}"
                for i, k in enumerate(projectors.OUTCOMES) for j, l in enumerate(projectors.OUTCOMES)]
    else:
        rows = [f"{k} {formats.fmt(float(vals[i]))}" for i, k in enumerate(projectors.OUTCOMES)]
    return "\n".join(rows) + "\n"


def _moments_text(m):
    vals = np.asarray(m.values)
    if m.paired:
        rows = [f"{p} {q} {formats.fmt(float(vals[p, q]))}" for p in range(3) for q in range(3)]
    else:
        rows = [f"{p} {formats.fmt(float(vals[p]))}" for p in range(3)]
    return "\n".join(rows) + "\n"


def _simulate(cfg):
    F = formats.read_matrix(cfg.source)
    config = experiment.ExperimentConfig(cfg.kind, cfg.a, cfg.b, cfg.n_events, cfg.seed, cfg.chunk)
    log = experiment.simulate(config, F)
    formats.write_event_log(cfg.out, log)


def _projectors(cfg):
    if cfg.method == "closed":
        ps = projectors.beam_projectors(cfg.a)
        mats = [ps[k] for k in projectors.OUTCOMES]
    else:
        from .spin import spin_projection

        # eigenvalues come out descending: +1, 0, -1
        mats = list(projectors.lagrange_projectors(spin_projection(cfg.a)).projectors)
    cfg.out.mkdir(parents=True, exist_ok=True)
    for name, m in zip(("M_plus1", "M_0", "M_minus1"), mats):
        formats.write_matrix(cfg.out / name, m)


def _tomography(cfg):
    design = formats.read_design(cfg.design)
    moments = formats.read_moments(cfg.moments)
    if len(design) != len(moments):
        raise DomainError(f"design lists {len(design)} directions but moments file has {len(moments)} rows")
    state = tomography.reconstruct_source([(a, m1, m2) for a, (m1, m2) in zip(design, moments)])
    formats.write_matrix(cfg.out, state.matrix)
    if state.psd_adjustment:
        print(f"psd_adjustment={formats.fmt(state.psd_adjustment)}", file=sys.stderr)


def _separability(cfg):
    rep = tomography.separability_residual(formats.read_dataset(cfg.dataset))
    text = f"residual={formats.fmt(rep.residual)}\npsd_adjustment={formats.fmt(rep.psd_adjustment)}\n"
    Path(cfg.out).write_text(text + formats.format_matrix(rep.fitted.matrix))


def _evolve(cfg):
    F0 = formats.read_matrix(cfg.source)
    sched = formats.read_schedule(cfg.schedule)
    traj, rep = dynamics.evolve_source(F0, sched, cfg.lambda_max, cfg.step)
    cfg.out.mkdir(parents=True, exist_ok=True)
    index = []
    for i, (lam, state) in enumerate(traj):
        if i % cfg.every and i != len(traj) - 1:
            continue
        name = f"F_{i:06d}.mat"
        formats.write_matrix(cfg.out / name, state.matrix)
        index.append(f"{formats.fmt(lam)} {name}")
    (cfg.out / "grid.txt").write_text("\n".join(index) + "\n")
    if cfg.report is not None:
        sections = [("evolution", [
            ("grid_points", len(traj)),
            ("spectrum_drift", rep.spectrum_drift),
            ("trace_derivative_residual", rep.trace_derivative_residual),
            ("unitarity_defect", rep.unitarity_defect),
        ])]
        prov = [("source", f"{cfg.source} sha256={formats.digest(cfg.source)}"),
                ("schedule", f"{cfg.schedule} sha256={formats.digest(cfg.schedule)}"),
                ("lambda_max", formats.fmt(cfg.lambda_max)),
                ("step", "default" if cfg.step is None else formats.fmt(cfg.step))]
        Path(cfg.report).write_text(formats.render_report(sections, prov))


def _report(cfg):
    log = formats.read_event_log(cfg.in_path)
    c = log.config
    n = c.n_events
    freq = experiment.relative_frequencies(log)
    mom = experiment.moments_from_events(log)
    labels = ([f"f({k},{l})" for k in projectors.OUTCOMES for l in projectors.OUTCOMES]
              if c.paired else [f"f({k})" for k in projectors.OUTCOMES])
    fvals = [float(x) for x in np.ravel(freq.values)]
    mlabels = ([f"<k^{p} l^{q}>" for p in range(3) for q in range(3)] if c.paired
               else [f"<k^{p}>" for p in range(3)])
    mvals = [float(x) for x in np.ravel(mom.values)]
    sections = [("frequencies", list(zip(labels, fvals))), ("moments", list(zip(mlabels, mvals)))]
    prov = [("events", f"{cfg.in_path} sha256={formats.digest(cfg.in_path)}"),
            ("kind", c.kind), ("N", n), ("seed", c.seed), ("chunk", c.chunk),
            ("a", formats.format_direction(c.a))]
    if c.b is not None:
        prov.append(("b", formats.format_direction(c.b)))
    if cfg.source is not None:
        F = formats.read_matrix(cfg.source)
        if c.kind == "single-sg":
            expected = experiment.single_sg_frequencies(F, c.a)
        elif c.kind == "double-sg":
            expected = experiment.double_sg_frequencies(F, c.a, c.b)
        else:
            expected = experiment.eprb_frequencies(F, c.a, c.b)
        exp_m = experiment.moments_from_table(expected)
        evals = np.ravel(expected.values)
        # deviation in binomial standard errors
        z = [(fv - e) / np.sqrt(e * (1 - e) / n) if 0 < e < 1 else 0.0 for fv, e in zip(fvals, evals)]
        rows = [(f"expected {lab}", float(e)) for lab, e in zip(labels, evals)]
        rows += [(f"expected {lab}", float(e)) for lab, e in zip(mlabels, np.ravel(exp_m.values))]
        rows.append(("max |z| over frequencies", float(np.max(np.abs(z)))))
        sections.append(("model comparison", rows))
        prov.append(("source", f"{cfg.source} sha256={formats.digest(cfg.source)}"))
    _emit(formats.render_report(sections, prov), cfg.out)


def run(cfg):
    """Dispatch a parsed command; returns the exit status."""
    try:
        if cfg.command == "simulate":
            _simulate(cfg)
        elif cfg.command == "freq":
            _emit(_table_text(experiment.relative_frequencies(formats.read_event_log(cfg.in_path))), cfg.out)
        elif cfg.command == "moments":
            _emit(_moments_text(experiment.moments_from_events(formats.read_event_log(cfg.in_path))), cfg.out)
        elif cfg.command == "projectors":
            _projectors(cfg)
        elif cfg.command == "tomography":
            _tomography(cfg)
        elif cfg.command == "separability":
            _separability(cfg)
        elif cfg.command == "evolve":
            _evolve(cfg)
        elif cfg.command == "report":
            _report(cfg)
        else:
            raise UsageError(f"unknown command {cfg.command!r}")
    except DomainError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    return run(cfg)
