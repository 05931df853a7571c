"""Command-line front end.

Every subcommand reads and writes plain JSON and CSV files so results can
be fed to plotting scripts.  Exit codes: 0 on
success, 1 on domain errors, 2 on malformed arguments.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fixtures, resonance
from .errors import MetricGraphError
from .graph import MetricGraph, load_graph, save_graph, validate
from .localization import BAND_NAMES, localization_report
from .spectral import DEFAULT_TOL, Eigenpair, extract_modes, scan_spectrum
from .wave import SimConfig, run

log = logging.getLogger("metricgraph")


@dataclass
class CommandOutcome:
    exit_code: int
    artifacts: list[str] = field(default_factory=list)
    summary: str = ""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _write(path, text: str, artifacts: list[str]) -> None:
    Path(path).write_text(text, encoding="utf-8")
    artifacts.append(str(path))


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_graph(path) -> MetricGraph:
    graph = load_graph(path)
    report = validate(graph)
    if not report.ok:
        msgs = "; ".join(i.message for i in report.issues)
        raise MetricGraphError("INVALID_GRAPH", msgs)
    return graph


def _modes_json(pair: Eigenpair) -> str:
    return json.dumps(pair.to_dict(), indent=1)


def _load_pairs(paths) -> list[Eigenpair]:
    pairs = []
    for p in paths:
        try:
            data = json.loads(Path(p).read_text(encoding="utf-8"))
        except OSError as exc:
            raise MetricGraphError("IO_ERROR", f"cannot read {p}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise MetricGraphError("BAD_MODE_FILE", f"{p}: {exc}") from exc
        records = data if isinstance(data, list) else [data]
        pairs += [Eigenpair.from_dict(r) for r in records]
    return pairs


# -- subcommands ------------------------------------------------------------------------


def cmd_spectrum(args, out: CommandOutcome) -> None:
    graph = _read_graph(args.graph)
    pairs = scan_spectrum(graph, args.kmin, args.kmax, args.step, args.tol)
    rows = [(q, repr(p.k), p.multiplicity, f"{p.residual:.3e}") for q, p in enumerate(pairs, 1)]
    text = _csv(rows, ["q", "k", "multiplicity", "residual"])
    if args.out:
        _write(args.out, text, out.artifacts)
    else:
        sys.stdout.write(text)
    if args.modes_out:
        _write(args.modes_out, json.dumps([p.to_dict() for p in pairs], indent=1), out.artifacts)
    out.summary = f"{len(pairs)} eigenvalue(s) in [{args.kmin}, {args.kmax}]"
    if not pairs:
        out.summary += " (NO_EIGENVALUES)"


def cmd_modes(args, out: CommandOutcome) -> None:
    graph = _read_graph(args.graph)
    pair = extract_modes(graph, args.k, args.tol)
    text = _modes_json(pair)
    if args.out:
        _write(args.out, text, out.artifacts)
    else:
        sys.stdout.write(text + "\n")
    out.summary = f"k={pair.k!r}: multiplicity {pair.multiplicity}"


def cmd_localize(args, out: CommandOutcome) -> None:
    graph = _read_graph(args.graph)
    if args.modes:
        pairs = _load_pairs(args.modes)
    elif args.kmax is not None:
        pairs = scan_spectrum(graph, args.kmin, args.kmax, args.step, args.tol)
    else:
        raise _UsageError("localize: give --modes or --kmax")
    rows, summaries, bands = [], [], []
    q = 0
    for pair in pairs:
        for mode in pair.modes:
            q += 1
            rep = localization_report(mode, graph, q)
            for j, e, E, band in zip(graph.arc_ids, rep.e, rep.E, rep.bands):
                rows.append((q, repr(rep.k), j, repr(float(e)), repr(float(E)), band))
            s = rep.summary()
            s["approximately_localized"] = rep.approximately_localized
            summaries.append(s)
            bands.append([q, repr(rep.k)] + [rep.bands.count(b) for b in BAND_NAMES])
    _write(args.out_csv, _csv(rows, ["q", "k", "j", "e_qj", "E_qj", "band"]), out.artifacts)
    if args.out_json:
        _write(args.out_json, json.dumps(summaries, indent=1), out.artifacts)
    if args.hist:
        _write(args.hist, _csv(bands, ["q", "k", *BAND_NAMES]), out.artifacts)
    flagged = [s["q"] for s in summaries if s["approximately_localized"]]
    out.summary = f"{q} mode(s) analysed; approximately localized: {flagged or 'none'}"


def cmd_resonance(args, out: CommandOutcome) -> None:
    graph = _read_graph(args.graph)
    spec = resonance.check_shape(graph, args.arcs, args.shape, args.nmax, args.rel_tol)
    if spec is None:
        out.summary = f"absent ({resonance.CITATIONS[resonance._shape_kind(args.shape, args.arcs)]})"
        return
    text = json.dumps(spec.to_dict())
    if args.out:
        _write(args.out, text, out.artifacts)
    out.summary = f"{resonance.CITATIONS[spec.kind]}\n{text}"


def cmd_tune(args, out: CommandOutcome) -> None:
    graph = _read_graph(args.graph)
    tuned, spec = resonance.tune_lengths(graph, args.arcs, args.shape, args.k)
    _write(args.out, tuned.to_json(), out.artifacts)
    if args.spec_out:
        _write(args.spec_out, json.dumps(spec.to_dict()), out.artifacts)
    lengths = ", ".join(f"l_{a}={tuned.arc(a).length:.9g}" for a in spec.arc_ids)
    out.summary = f"{resonance.CITATIONS[spec.kind]}; n={list(spec.integers)}; {lengths}"


def cmd_certify(args, out: CommandOutcome) -> None:
    lengths = [v for chunk in args.length for v in _floats(chunk)]
    cert = resonance.certify_nonexistence(args.config, lengths, args.k)
    out.summary = cert.text()


def cmd_generate(args, out: CommandOutcome) -> None:
    if args.kind == "g14":
        graph = fixtures.load_g14()
    elif args.kind == "pumpkin-demo":
        graph = fixtures.load_pumpkin_demo()
    else:
        law = json.loads(args.length_law) if args.length_law.strip().startswith("{") else float(args.length_law)
        graph = fixtures.generate_buffon(args.needles, args.box, law, args.seed, args.trim)
    save_graph(graph, args.out)
    out.artifacts.append(str(args.out))
    out.summary = f"{args.kind}: {graph.m} arcs, {graph.n} vertices"


def cmd_wave(args, out: CommandOutcome) -> None:
    graph = _read_graph(args.graph)
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise MetricGraphError("IO_ERROR", f"cannot read {args.config}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise MetricGraphError("BAD_CONFIG", str(exc)) from exc
    result = run(graph, SimConfig.from_dict(cfg))
    header = ["t"] + [f"E_{a}" for a in graph.arc_ids] + ["E_total"]
    rows = [[repr(e.t)] + [repr(float(v)) for v in e.per_arc] + [repr(e.total)] for e in result.energies]
    _write(args.out, _csv(rows, header), out.artifacts)
    if args.snapshots:
        snaps = [{"t": t, "arcs": {str(k): v for k, v in result.arc_fields(u).items()}}
                 for t, u in result.snapshots]
        _write(args.snapshots, json.dumps(snaps), out.artifacts)
    final = result.energies[-1].total if result.energies else 0.0
    out.summary = f"t={result.state.t:.6g}, total energy {final:.6e}"


# -- parser ------------------------------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(0))
    parser.add_argument("--tol", type=float, default=default(DEFAULT_TOL))
    parser.add_argument("--nmax", type=int, default=default(resonance.N_MAX))
    parser.add_argument("--threads", type=int, default=default(1), help="accepted for compatibility; ignored")
    parser.add_argument("--verbose", action="store_true", default=default(False))


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(add_help=False)
    _global_flags(top, suppress=False)
    # repeated after the subcommand name without clobbering earlier values
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)

    p = _Parser(prog="metricgraph", description=__doc__.splitlines()[0], parents=[top])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("spectrum", parents=[common], help="resonant frequencies to CSV")
    s.add_argument("--graph", required=True)
    s.add_argument("--kmin", type=float, default=0.0)
    s.add_argument("--kmax", type=float, required=True)
    s.add_argument("--step", type=float, default=None)
    s.add_argument("--out")
    s.add_argument("--modes-out")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("modes", parents=[common], help="null-space eigenvectors at one k")
    s.add_argument("--graph", required=True)
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_modes)

    s = sub.add_parser("localize", parents=[common], help="per-arc localization report")
    s.add_argument("--graph", required=True)
    s.add_argument("--modes", action="append", help="mode JSON file (repeatable)")
    s.add_argument("--kmin", type=float, default=0.0)
    s.add_argument("--kmax", type=float)
    s.add_argument("--step", type=float, default=None)
    s.add_argument("--out-csv", required=True)
    s.add_argument("--out-json")
    s.add_argument("--hist")
    s.set_defaults(func=cmd_localize)

    s = sub.add_parser("resonance", parents=[common], help="check a shape for exact resonance")
    s.add_argument("--graph", required=True)
    s.add_argument("--arcs", type=_ints, required=True)
    s.add_argument("--shape", choices=resonance.KINDS, required=True)
    s.add_argument("--rel-tol", type=float, default=resonance.REL_TOL)
    s.add_argument("--out")
    s.set_defaults(func=cmd_resonance)

    s = sub.add_parser("tune", parents=[common], help="retune arc lengths to resonate at k")
    s.add_argument("--graph", required=True)
    s.add_argument("--arcs", type=_ints, required=True)
    s.add_argument("--shape", choices=resonance.KINDS, required=True)
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--spec-out")
    s.set_defaults(func=cmd_tune)

    s = sub.add_parser("certify", parents=[common], help="rank certificate of non-existence")
    s.add_argument("config", choices=sorted(resonance.CONFIGS))
    s.add_argument("--length", action="append", required=True, help="length or comma list (repeatable)")
    s.add_argument("--k", type=float, required=True)
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("generate", parents=[common], help="write a fixture or random needle graph")
    s.add_argument("kind", choices=["buffon", "g14", "pumpkin-demo"])
    s.add_argument("--out", required=True)
    s.add_argument("--needles", type=int, default=200)
    s.add_argument("--box", type=float, default=7.5)
    s.add_argument("--length-law", default="1.0", help="fixed length or JSON law")
    s.add_argument("--trim", type=float, default=0.0)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("wave", parents=[common], help="time-domain simulation")
    s.add_argument("--graph", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--snapshots")
    s.set_defaults(func=cmd_wave)
    return p


def run_command(argv) -> CommandOutcome:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except _UsageError as exc:
        return CommandOutcome(2, [], str(exc))
    except SystemExit as exc:  # --help
        return CommandOutcome(0 if not exc.code else 2, [], "")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    out = CommandOutcome(0)
    try:
        args.func(args, out)
    except _UsageError as exc:
        return CommandOutcome(2, [], str(exc))
    except MetricGraphError as exc:
        for path in out.artifacts:
            Path(path).unlink(missing_ok=True)
        return CommandOutcome(1, [], str(exc))
    return out


def main(argv=None) -> None:
    outcome = run_command(sys.argv[1:] if argv is None else argv)
    if outcome.summary:
        stream = sys.stdout if outcome.exit_code == 0 else sys.stderr
        print(outcome.summary, file=stream)
    sys.exit(outcome.exit_code)


if __name__ == "__main__":
    main()
