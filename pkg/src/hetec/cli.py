"""Command-line front end: transpile, estimate, sweep, compare, bench."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .circuit_ir import BENCHMARK_KINDS, LogicalCircuit, QasmError, gen_benchmark, load_qasm, print_qasm
from .cost_model import ArchitectureConfig, block_count
from .pbc import dumps_pbc, summarize, transpile
from .scheduler import SchedulerError, schedule_stats
from .tradeoff import SWEEP_FIELDS, compare, heterogeneous_run, sweep_row

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2
DEFAULT_BENCHMARKS = (("adder", 18), ("ising", 8), ("qft", 8))
SEED_MAX = 2**64 - 1


class InputMissingError(Exception):
    pass


# --------------------------------------------------------------------------
# Inputs and configuration


def resolve_input(spec: str, rz_word_len: int) -> tuple[LogicalCircuit, dict]:
    """A QASM path, or ``kind:n`` naming a generated benchmark."""
    path = Path(spec)
    if path.exists():
        data = path.read_bytes()
        circuit = load_qasm(path)
        return circuit, {"path": str(path), "sha256": hashlib.sha256(data).hexdigest()}
    kind, sep, n = spec.partition(":")
    if sep and kind in BENCHMARK_KINDS and n.isdigit():
        circuit = gen_benchmark(kind, int(n), rz_word_len)
        return circuit, {"benchmark": kind, "n": int(n), "rz_word_len": rz_word_len}
    raise InputMissingError(f"input {spec!r} is neither an existing file nor a benchmark spec like adder:18")


def _max_weight(text: str | None) -> int | None:
    if text is None or text.lower() in ("inf", "none", "unbounded"):
        return None
    w = int(text)
    if w < 1:
        raise argparse.ArgumentTypeError("--max-weight must be >= 1 or 'inf'")
    return w


def _seed(text: str) -> int:
    s = int(text, 0)
    if not 0 <= s <= SEED_MAX:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return s


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


ARCH_FLAGS = {"surface_tiles": "surface_tiles", "distance": "distance", "p": "p", "bus": "bus_variant",
              "gross_blocks": "gross_blocks"}


def build_arch(args, n_qubits: int) -> ArchitectureConfig:
    """Arch file values, then CLI flags; block count defaults to what n qubits need."""
    raw: dict = {}
    if args.arch:
        path = Path(args.arch)
        if not path.exists():
            raise InputMissingError(f"architecture file {path} not found")
        raw = json.loads(path.read_text())
    for flag, fieldname in ARCH_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            raw[fieldname] = val
    arch = ArchitectureConfig.from_dict(raw)
    if "gross_blocks" not in raw:
        arch = arch.replace(gross_blocks=block_count(n_qubits, arch.surface_tiles, arch.block_capacity))
    return arch


def header(command: str, args, arch: ArchitectureConfig | None, source: dict, max_weight) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": args.seed,
        "max_weight": "inf" if max_weight is None else max_weight,
        "input": source,
        "config": arch.to_dict() if arch is not None else None,
    }


# --------------------------------------------------------------------------
# Output


def _content_name(stem: str, hdr: dict, suffix: str) -> str:
    key = hashlib.sha256(json.dumps(hdr, sort_keys=True).encode()).hexdigest()[:12]
    return f"{stem}-{key}{suffix}"


def write_atomic(path: Path, text: str) -> Path:
    """Write via a temp file in the same directory; never leaves partial output."""
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists() and path.read_text() == text:
        return path
    if path.exists():
        raise FileExistsError(f"{path} exists with different content; refusing to overwrite")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".partial-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(rows: list[dict], fields, hdr: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(hdr, sort_keys=True) + "\n")
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _emit(args, stem: str, hdr: dict, body: dict, csv_rows: list[dict] | None = None, fields=None) -> Path:
    out = Path(args.out)
    if args.format == "csv" and csv_rows is not None:
        return write_atomic(out / _content_name(stem, hdr, ".csv"), _csv_text(csv_rows, fields, hdr))
    return write_atomic(out / _content_name(stem, hdr, ".json"), _dump_json({**hdr, **body}))


# --------------------------------------------------------------------------
# Commands


def _stem(source: dict, circuit: LogicalCircuit) -> str:
    if "benchmark" in source:
        return f"{source['benchmark']}-{source['n']}"
    return Path(source["path"]).stem or circuit.name or "circuit"


def cmd_transpile(args) -> int:
    circuit, source = resolve_input(args.input, args.rz_word_len)
    w = args.max_weight
    pbc = transpile(circuit, w)
    summary = summarize(pbc)
    hdr = header("transpile", args, None, source, w)
    body = {"summary": summary.__dict__ | {"t_count": circuit.t_count}}
    stem = _stem(source, circuit)
    out = Path(args.out)
    pbc_path = out / _content_name(stem, hdr, ".pbc")
    written = []
    try:
        written.append(write_atomic(pbc_path, dumps_pbc(pbc)))
        body["pbc_file"] = pbc_path.name
        written.append(_emit(args, stem + "-summary", hdr, body, [summary.__dict__], list(summary.__dict__)))
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    print(json.dumps(body["summary"], sort_keys=True))
    print(written[-1])
    return EXIT_OK


def _run(circuit: LogicalCircuit, arch: ArchitectureConfig, seed: int, max_weight):
    return heterogeneous_run(circuit, arch, seed, max_weight)


def cmd_estimate(args) -> int:
    circuit, source = resolve_input(args.input, args.rz_word_len)
    arch = build_arch(args, circuit.width)
    w = args.max_weight if args.max_weight_set else arch.surface_tiles
    run = _run(circuit, arch, args.seed, w)
    stats = schedule_stats(run.schedule)
    hdr = header("estimate", args, arch, source, w)
    body = {"result": run.to_dict(), "schedule_stats": stats.__dict__}
    path = _emit(args, _stem(source, circuit) + "-estimate", hdr, body, [sweep_row(run, arch)], SWEEP_FIELDS)
    print(json.dumps(body["result"]["breakdown"], sort_keys=True))
    print(path)
    return EXIT_OK


def _sweep_job(job):
    circuit, arch, seed, w = job
    run = _run(circuit, arch, seed, w)
    return sweep_row(run, arch)


def cmd_sweep(args) -> int:
    circuit, source = resolve_input(args.input, args.rz_word_len)
    base = build_arch(args, circuit.width)
    s_list = args.s_list or [base.surface_tiles]
    p_list = args.p_list or [base.p]
    jobs = []
    for S in s_list:
        B = block_count(circuit.width, S, base.block_capacity)
        for p in p_list:
            arch = base.replace(surface_tiles=S, gross_blocks=B, p=p)
            w = args.max_weight if args.max_weight_set else S
            jobs.append((circuit, arch, args.seed, w))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]
    hdr = header("sweep", args, base, source, args.max_weight if args.max_weight_set else "S")
    hdr["grid"] = {"S": s_list, "p": p_list}
    fmt_csv = args.format != "json"
    stem = _stem(source, circuit) + "-sweep"
    out = Path(args.out)
    if fmt_csv:
        path = write_atomic(out / _content_name(stem, hdr, ".csv"), _csv_text(rows, SWEEP_FIELDS, hdr))
    else:
        path = write_atomic(out / _content_name(stem, hdr, ".json"), _dump_json({**hdr, "rows": rows}))
    print(path)
    return EXIT_OK


def cmd_compare(args) -> int:
    circuit, source = resolve_input(args.input, args.rz_word_len)
    arch = build_arch(args, circuit.width)
    w = args.max_weight if args.max_weight_set else arch.surface_tiles
    report = compare(circuit, arch, None, args.seed, w)
    hdr = header("compare", args, arch, source, w)
    body = {"report": report.to_dict()}
    path = _emit(args, _stem(source, circuit) + "-compare", hdr, body, [report.to_dict()], list(report.to_dict()))
    print(json.dumps(body["report"], sort_keys=True))
    print(path)
    return EXIT_OK


def cmd_bench(args) -> int:
    specs = DEFAULT_BENCHMARKS
    if args.kinds:
        specs = []
        for item in args.kinds:
            kind, _, n = item.partition(":")
            specs.append((kind, int(n)))
    out = Path(args.out)
    for kind, n in specs:
        circuit = gen_benchmark(kind, n, args.rz_word_len)
        path = out / f"{kind}-{n}.qasm"
        text = print_qasm(circuit)
        if path.exists() and path.read_text() != text:
            path.unlink()
        write_atomic(path, text)
        print(path)
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser


def _common(p: argparse.ArgumentParser, arch: bool = True) -> None:
    p.add_argument("input", help="QASM file or benchmark spec such as adder:18")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--max-weight", default=None, help="pruning weight limit W (integer or 'inf'); default S")
    p.add_argument("--rz-word-len", type=int, default=30, help="rz word length for generated benchmarks")
    p.add_argument("--out", default="reports")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    if arch:
        p.add_argument("--arch", help="JSON file of architecture fields")
        p.add_argument("--surface-tiles", type=int)
        p.add_argument("--distance", type=int)
        p.add_argument("--p", type=float)
        p.add_argument("--bus", choices=("mono", "ssip", "ckbb"))
        p.add_argument("--gross-blocks", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transpile", help="decompose and prune to a PBC circuit")
    _common(p, arch=False)
    p.set_defaults(func=cmd_transpile)

    p = sub.add_parser("estimate", help="schedule and estimate error, cycles and qubits")
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="estimate over a grid of surface tile counts and error rates")
    _common(p)
    p.add_argument("--S-list", dest="s_list", type=_int_list)
    p.add_argument("--p-list", dest="p_list", type=_float_list)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep, format="csv")

    p = sub.add_parser("compare", help="heterogeneous vs all-surface trade-off")
    _common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="regenerate the benchmark QASM fixtures")
    p.add_argument("--out", default="benchmarks")
    p.add_argument("--rz-word-len", type=int, default=30)
    p.add_argument("--kinds", nargs="*", help="kind:n specs; default adder:18 ising:8 qft:8")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "max_weight"):
        args.max_weight_set = args.max_weight is not None
        try:
            args.max_weight = _max_weight(args.max_weight)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            parser.error(str(exc))
    try:
        return args.func(args)
    except (InputMissingError, FileNotFoundError) as exc:
        print(f"hetec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QasmError, SchedulerError, ValueError, FileExistsError, OSError) as exc:
        print(f"hetec: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
