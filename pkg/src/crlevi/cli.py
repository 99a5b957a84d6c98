"""Command line entry point: analyze, asymptotics, corpus, normalize, frame.

Exit codes: 0 success, 2 when some samples or quadrature points failed (the
report is still written, with the failures listed), 1 on fatal errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import asym, corpus, levi
from .crgeom import characteristic_codirection, cr_frame
from .errors import CRLeviError, InsufficientSpan, ManifestError
from .manifest import Manifest
from .normal import normalize

SCHEMA = 1
EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2


class Fatal(Exception):
    pass


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _cpx(z):
    return [float(np.real(z)), float(np.imag(z))]


def load_manifest(spec):
    """A path to a JSON file, or the name of a corpus entry."""
    path = Path(spec)
    if not path.exists() and not spec.endswith(".json"):
        path = corpus.corpus_dir() / f"{spec}.json"
    return Manifest.load(path)


def _lam(args, k):
    if args.lam is None:
        return np.eye(k)[0]
    if len(args.lam) != k:
        raise Fatal(f"--lambda needs {k} components, got {len(args.lam)}")
    return np.asarray(args.lam)


def dumps(report):
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=True) + "\n"


# ----------------------------------------------------------------- text
def _text_analyze(r):
    lines = [f"manifest {r['manifest']}  n={r['n']} k={r['k']}  samples={r['samples']} seed={r['seed']}"]
    lines.append("signatures: " + ", ".join(str(tuple(s)) for s in r["scan"]["signatures"]))
    lines.append(f"rank range: {r['scan']['min_rank']}..{r['scan']['max_rank']}")
    if "levi" in r:
        lines.append(f"levi at lambda={r['levi']['lambda']}: {tuple(r['levi']['signature'])}")
    lines.append(f"{'q':>3}  {'status':<13} signature")
    for d in r["failures"]["degrees"]:
        sig = tuple(d["signature"]) if d["signature"] else "-"
        lines.append(f"{d['q']:>3}  {d['status']:<13} {sig}")
    if r["errors"]:
        lines.append(f"errors: {len(r['errors'])}")
    return "\n".join(lines) + "\n"


def summary_line(r):
    fit = r.get("fit") or {}
    shrink = r.get("shrink_law") or {}
    fmt = lambda x: "nan" if x is None else f"{x:.6g}"
    return (f"{r['name']}: exponent {fmt(fit.get('slope'))} (expected {r['expected_exponent']:g})  "
            f"c1 {fmt(r.get('c1'))}  c2 {fmt(r.get('c2'))}  C {fmt(shrink.get('C'))}  "
            f"boundary slope {fmt(shrink.get('boundary_slope'))}")


def _text_asymptotics(r):
    lines = [summary_line(r), f"{'tau':>12} {'|I|':>14} {'normalized':>12} method   ok"]
    for t, it, nv in zip(r["tau_grid"], r["integrals"], r["normalized"]):
        if it is None:
            lines.append(f"{t:12.5g} {'-':>14} {'-':>12}")
            continue
        lines.append(f"{t:12.5g} {it['abs']:14.6e} {nv:12.8f} {it['method']:<8} {'y' if it['converged'] else 'n'}")
    lines.append(f"gaussian limit {r['gaussian_limit']:.10f}")
    for e in r["errors"]:
        lines.append(f"error: {e}")
    return "\n".join(lines) + "\n"


def _text_corpus(r):
    lines = [f"{'name':<18} {'status':<9} signatures"]
    for e in r["entries"]:
        lines.append(f"{e['name']:<18} {e['status']:<9} " + ", ".join(str(tuple(s)) for s in e["signatures"]))
    lines.append(f"{r['passed']}/{r['checked']} pass")
    return "\n".join(lines) + "\n"


def _text_generic(r):
    return dumps(r)


TEXT = {"analyze": _text_analyze, "asymptotics": _text_asymptotics, "corpus": _text_corpus}


# ------------------------------------------------------------- commands
def cmd_analyze(args):
    m = load_manifest(args.manifest)
    ds = m.system()
    rep = levi.failure_report(ds, N=args.samples, seed=args.seed)
    out = {"schema": SCHEMA, "command": "analyze", "manifest": m.name, "n": m.n, "k": m.k,
           "samples": args.samples, "seed": args.seed,
           "scan": rep.scan.to_dict(), "failures": rep.to_dict(),
           "errors": [e for e in rep.scan.errors if e is not None]}
    if args.lam is not None:
        xi = characteristic_codirection(ds, ds.basepoint, _lam(args, ds.k))
        out["levi"] = levi.levi_matrix(ds, xi).to_dict()
        out["regularity"] = levi.regularity_check(ds, xi, seed=args.seed).to_dict()
    return out, (EXIT_PARTIAL if out["errors"] else EXIT_OK), {}


def _check_grid(taus):
    window = [t for t in taus if t <= asym.FIT_MAX_TAU * (1 + 1e-9)]
    asym.exponent_fit([(t, 1.0) for t in window])  # raises InsufficientSpan before any integration


def _dat(rows, header):
    return "# " + header + "\n" + "".join(" ".join(f"{x:.12g}" for x in row) + "\n" for row in rows)


def cmd_asymptotics(args):
    m = load_manifest(args.manifest)
    ds = m.system()
    taus = args.tau_grid or list(asym.TAU_GRID)
    _check_grid(taus)
    ns = normalize(ds, lam=_lam(args, ds.k))
    pp = asym.build_phases(ns, nu=args.nu)
    sr = asym.asymptotics(pp, tau_grid=taus, r_grid=args.r_grid or asym.R_GRID,
                          R_grid=args.R_grid or asym.BIG_R_GRID, seed=args.seed, name=m.name)
    out = sr.to_dict()
    out.update(command="asymptotics", manifest=m.name, seed=args.seed, complete=sr.complete,
               **{"lambda": ns.codirection.lam.tolist()})
    data = {
        "pairing.dat": _dat([(t, it["abs"], nv) for t, it, nv in zip(out["tau_grid"], out["integrals"],
                                                                      out["normalized"]) if it],
                            "tau |I(tau)| normalized"),
        "phi_bound.dat": _dat(zip(out["r_grid"], out["phi_remainder_bound"]), "r remainder_bound"),
        "annulus.dat": _dat(zip(out["R_grid"], [-s for s in out["sup_re_psi_annulus"]]), "R -sup_Re_psi"),
    }
    if out["shrink_law"]:
        data["boundary.dat"] = _dat(out["shrink_law"]["boundary"], "r r_prime")
    return out, (EXIT_OK if sr.complete else EXIT_PARTIAL), data


def cmd_corpus(args):
    directory = Path(args.manifest) if args.manifest else corpus.corpus_dir()
    paths = corpus.manifest_paths(directory)
    if not paths:
        raise Fatal(f"no manifests found in {directory}")
    manifests = [Manifest.load(p) for p in paths]  # fail before running anything
    entries = [corpus.check_manifest(m, samples=args.samples, seed=args.seed) for m in manifests]
    checked = [e for e in entries if e["status"] != "UNCHECKED"]
    passed = sum(e["status"] == "PASS" for e in checked)
    out = {"schema": SCHEMA, "command": "corpus", "samples": args.samples, "seed": args.seed,
           "entries": entries, "checked": len(checked), "passed": passed}
    if passed < len(checked):
        return out, EXIT_FATAL, {}
    if any(e["sample_errors"] for e in entries):
        return out, EXIT_PARTIAL, {}
    return out, EXIT_OK, {}


def cmd_normalize(args):
    m = load_manifest(args.manifest)
    ds = m.system()
    ns = normalize(ds, lam=_lam(args, ds.k))
    out = {"schema": SCHEMA, "command": "normalize", "manifest": m.name, "normal_form": ns.to_dict(),
           "nu_threshold": asym.nu_threshold(ns)}
    return out, EXIT_OK, {}


def cmd_frame(args):
    m = load_manifest(args.manifest)
    ds = m.system()
    zeta, t = ds.graph_coords(ds.basepoint)
    fr = cr_frame(ds, zeta, t)
    out = {"schema": SCHEMA, "command": "frame", "manifest": m.name,
           "zeta": [_cpx(z) for z in fr.zeta], "t": fr.t.tolist(),
           "C": [[_cpx(c) for c in row] for row in fr.C], "residual": fr.residual, "cond": fr.cond}
    return out, EXIT_OK, {}


COMMANDS = {"analyze": cmd_analyze, "asymptotics": cmd_asymptotics, "corpus": cmd_corpus,
            "normalize": cmd_normalize, "frame": cmd_frame}


def build_parser():
    ap = argparse.ArgumentParser(prog="crlevi", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--manifest", required=name != "corpus",
                       help="manifest JSON path or corpus name (corpus: directory of manifests)")
        p.add_argument("--samples", type=int, default=64, help="codirection samples per scan")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--lambda", dest="lam", type=_floats, default=None, help="codirection, e.g. 1,0")
        p.add_argument("--nu", type=float, default=float(asym.DEFAULT_NU))
        p.add_argument("--tau-grid", type=_floats, default=None)
        p.add_argument("--r-grid", type=_floats, default=None)
        p.add_argument("--R-grid", dest="R_grid", type=_floats, default=None)
        p.add_argument("--out", type=Path, default=None, help="output directory (default: stdout)")
        p.add_argument("--format", choices=("json", "text"), default="json")
    return ap


def _stem(args, report):
    return f"{report.get('manifest', 'corpus')}.{args.command}"


def write_outputs(args, report, data):
    text = TEXT.get(args.command, _text_generic)(report) if args.format == "text" else dumps(report)
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.mkdir(parents=True, exist_ok=True)
    stem = _stem(args, report)
    (args.out / f"{stem}.{'txt' if args.format == 'text' else 'json'}").write_text(text)
    for fname, body in data.items():
        (args.out / f"{stem}.{fname}").write_text(body)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        report, code, data = COMMANDS[args.command](args)
    except (Fatal, ManifestError, InsufficientSpan) as err:
        print(f"crlevi: error: {err}", file=sys.stderr)
        return EXIT_FATAL
    except CRLeviError as err:
        print(f"crlevi: error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_FATAL
    write_outputs(args, report, data)
    if args.command == "asymptotics":
        print(summary_line(report), file=sys.stderr if args.out is None else sys.stdout)
    elif args.command == "corpus" and args.format == "json":
        print(f"{report['passed']}/{report['checked']} pass", file=sys.stderr)
    for e in report.get("errors", []) if code == EXIT_PARTIAL else []:
        print(f"crlevi: warning: {e}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
