"""Command-line interface: ``tslasso {generate,run,replicate,path,diagnose,check-gradients}``.

Settings come from an optional INI file (``--config``) with ``[generate]``
and ``[run]`` sections; command-line flags override file keys. Exit codes:
0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import os
import re
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import grouplasso, io, synth
from .diagnostics import sampled_conditions, write_cosine_csv
from .dictionary.check import gradient_errors, pushforward_errors, sample_points
from .dictionary.molecular import MolecularDictionary, featurize_planar_angles, fit_projection
from .exceptions import ConfigError, RankDeficient, TSLassoError
from .pipeline import FAILED, RunConfig, normalize, project, replicate, run, subsample
from .pointcloud import read_array, write_matrix
from .tangent import estimate_tangent_frames

logger = logging.getLogger("tslasso")

GRADIENT_TOL = 1e-4
PUSHFORWARD_TOL = 1e-3

GENERATE_KEYS = {
    "generator": str, "n": int, "seed": int, "ambient_dim": int, "sigma": float, "grid": str,
    "d_features": int, "noise_space": str, "freeze_g2": bool, "configs": str, "format": str,
    "header": bool, "bonds": str,
}
RUN_KEYS = {f.name: f.type for f in fields(RunConfig)}
RUN_KEYS.update({"threads": int, "n_grid": int, "min_ratio": float, "support": str, "lambda": float,
                 "n_points": int, "h": float})
_TYPES = {"int": int, "float": float, "str": str, "Optional[float]": float}
SECTIONS = {"generate": GENERATE_KEYS, "run": RUN_KEYS}


class UsageError(Exception):
    """Bad command line or config file; exit code 2."""


# ------------------------------------------------------------------ config

def _coerce(kind, raw, where):
    kind = _TYPES.get(kind, kind) if isinstance(kind, str) else kind
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("1", "true", "yes", "on")
        return kind(raw)
    except ValueError:
        raise UsageError(f"{where}: cannot parse {raw!r} as {kind.__name__}") from None


KEY_SUFFIX = r"\s*[=:]"


def _line_of(text, pattern):
    for lineno, line in enumerate(text.splitlines(), start=1):
        if re.match(pattern, line.strip()):
            return lineno
    return "?"


def read_config(path) -> dict:
    """Parse an INI file into ``{section: {key: value}}`` with type checks.

    Unknown sections and keys are errors, reported with their line number.
    """
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    text = path.read_text()
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as err:
        raise UsageError(f"{path}: {err}") from None
    out = {}
    for section in parser.sections():
        if section not in SECTIONS:
            lineno = _line_of(text, r"\[" + re.escape(section) + r"\]")
            raise UsageError(f"{path}:{lineno}: unknown section [{section}]")
        allowed = SECTIONS[section]
        out[section] = {}
        for key, raw in parser.items(section):
            where = f"{path}:{_line_of(text, re.escape(key) + KEY_SUFFIX)}"
            if key not in allowed:
                raise UsageError(f"{where}: unknown key {key!r} in [{section}]")
            out[section][key] = _coerce(allowed[key], raw, where)
    return out


def _merge(file_values: dict, args, keys) -> dict:
    merged = dict(file_values)
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _run_config(values: dict) -> RunConfig:
    kw = {k: values[k] for k in (f.name for f in fields(RunConfig)) if k in values}
    return RunConfig(**kw)


# ------------------------------------------------------------------ helpers

def _load_dataset(args):
    data = Path(args.data)
    if not data.is_dir():
        raise FileNotFoundError(f"no such data directory: {data}")
    if not args.no_verify:
        io.verify_manifest(data)
    spec = io.read_json(data / "dictionary.json")
    dictionary = io.load_dictionary(data / "dictionary.json")
    n_atoms = spec.get("featurization", {}).get("n_atoms")
    cloud = io.load_cloud(data, configs=spec.get("configs"), n_atoms=n_atoms)
    return cloud, dictionary


def _write_frequency_csv(path, summary):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["support", "names", "count"])
        for row in summary.to_dict()["support_counts"]:
            supp = row["support"]
            w.writerow([FAILED if supp == FAILED else " ".join(map(str, supp)),
                        " ".join(row["names"]), row["count"]])


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------------- commands

def cmd_generate(args, conf):
    v = _merge(conf.get("generate", {}), args, GENERATE_KEYS)
    gen = v.get("generator", "swiss-roll")
    out = _out_dir(args)
    files = []
    seed = v.get("seed", 0)
    if gen == "swiss-roll":
        spec = synth.SwissRollSpec(n=v.get("n", 2000), ambient_dim=v.get("ambient_dim", 49), seed=seed)
        data = synth.swiss_roll(spec)
        write_matrix(out / "points.bin", data.cloud.points)
        write_matrix(out / "truth.csv", data.truth, format="csv")
        write_matrix(out / "rotation.bin", data.rotation)
        io.write_json(out / "dictionary.json", io.swissroll_spec(spec.ambient_dim))
        files = ["points.bin", "truth.csv", "rotation.bin", "dictionary.json"]
        params = {k: (list(x) if isinstance(x, tuple) else x) for k, x in asdict(spec).items()}
    elif gen == "rigid-ethanol":
        spec = synth.RigidEthanolSpec(n=v.get("n", 2000), sigma=v.get("sigma", 0.0), seed=seed,
                                      grid=v.get("grid", "uniform-grid"), D=v.get("d_features", 50),
                                      noise_space=v.get("noise_space", "atoms"),
                                      freeze_g2=v.get("freeze_g2", False))
        data = synth.rigid_ethanol(spec)
        _write_molecular(out, data.cloud.points, data.configs, data.fmap, data.atom_labels, data.bonds)
        write_matrix(out / "truth.csv", data.truth, format="csv")
        files = ["points.bin", "truth.csv", "configs.bin", "projection.bin", "feature_mean.bin",
                 "bonds.json", "dictionary.json"]
        params = asdict(spec)
    elif gen == "molecular":
        if "configs" not in v:
            raise UsageError("generator 'molecular' needs --configs (n x 3*n_atoms matrix)")
        flat = read_array(v["configs"], format=v.get("format", "csv"), header=v.get("header", False))
        if flat.shape[1] % 3:
            raise UsageError(f"{v['configs']}: column count {flat.shape[1]} is not a multiple of 3")
        configs = flat.reshape(flat.shape[0], -1, 3)
        if "bonds" in v:
            labels, bonds = io.read_bond_diagram(v["bonds"])
        else:
            labels, bonds = synth.ETHANOL_LABELS, synth.ETHANOL_BONDS
        if len(labels) != configs.shape[1]:
            raise UsageError(f"bond diagram has {len(labels)} atoms, configurations have {configs.shape[1]}")
        fmap = fit_projection(featurize_planar_angles(configs), v.get("d_features", 50), n_atoms=configs.shape[1])
        _write_molecular(out, fmap.transform(configs), configs, fmap, labels, bonds)
        files = ["points.bin", "configs.bin", "projection.bin", "feature_mean.bin", "bonds.json", "dictionary.json"]
        params = {"configs": str(v["configs"]), "d_features": fmap.D}
    else:
        raise UsageError(f"unknown generator {gen!r}")
    io.write_manifest(out, files, generator=gen, seed=seed, params=params)
    print(f"wrote {len(files)} files and {io.MANIFEST} to {out}")
    return 0


def _write_molecular(out, points, configs, fmap, labels, bonds):
    write_matrix(out / "points.bin", points)
    io.write_configs(out / "configs.bin", configs)
    write_matrix(out / "projection.bin", fmap.projection)
    write_matrix(out / "feature_mean.bin", fmap.mean[None, :])
    io.write_bond_diagram(out / "bonds.json", labels, bonds)
    io.write_json(out / "dictionary.json", io.molecular_spec(fmap.n_atoms))


def cmd_run(args, conf):
    cfg = _run_config(_merge(conf.get("run", {}), args, RUN_KEYS))
    cloud, dictionary = _load_dataset(args)
    res = run(cloud, dictionary, cfg)
    out = _out_dir(args)
    io.write_json(out / "result.json", res.to_dict())
    grouplasso.write_path_csv(res.path, out / "path.csv")
    print("support:", ", ".join(res.support_names) or "(empty)", f"lambda={res.lambda_star:.6g}",
          "(flagged)" if res.flagged else "")
    return 0


def cmd_replicate(args, conf):
    v = _merge(conf.get("run", {}), args, RUN_KEYS)
    cfg = _run_config(v)
    threads = v.get("threads") or os.cpu_count() or 1
    cloud, dictionary = _load_dataset(args)
    summary = replicate(cloud, dictionary, cfg, threads=threads)
    out = _out_dir(args)
    io.write_json(out / "summary.json", summary.to_dict())
    _write_frequency_csv(out / "frequency.csv", summary)
    with open(out / "paths.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replicate", "lambda", "group_index", "group_norm"])
        for k, res in enumerate(summary.results):
            if res is None:
                continue
            for pp in sorted(res.path, key=lambda q: q.lam):
                for j, g in enumerate(pp.group_norms):
                    w.writerow([k, repr(pp.lam), j, repr(float(g))])
    for row in summary.to_dict()["support_counts"]:
        label = FAILED if row["support"] == FAILED else ",".join(row["names"])
        print(f"{row['count']:4d}  {label}")
    return 0


def _design(cloud, dictionary, cfg):
    I = subsample(cloud.n, cfg.n_prime, cfg.seed)
    frames = estimate_tangent_frames(cloud, I, cfg.d, cfg.r_n, cfg.kernel_spec())
    raw = dictionary.gradients(cloud, I)
    grads, gammas = normalize(raw)
    return grouplasso.ProjectedDesign(project(frames, grads), gammas, I), np.linalg.norm(grads, axis=2)


def cmd_path(args, conf):
    v = _merge(conf.get("run", {}), args, RUN_KEYS)
    cfg = _run_config(v)
    cloud, dictionary = _load_dataset(args)
    X, _ = _design(cloud, dictionary, cfg)
    path = grouplasso.trace_path(X, n_grid=v.get("n_grid", 50), min_ratio=v.get("min_ratio", 1e-3),
                                 tol=cfg.tol, max_iter=cfg.max_iter)
    out = _out_dir(args)
    grouplasso.write_path_csv(path, out / "path.csv")
    print(f"wrote {len(path)} path points to {out / 'path.csv'}")
    return 0


def _parse_support(text, names):
    out = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok in names:
            out.append(names.index(tok))
        else:
            try:
                out.append(int(tok))
            except ValueError:
                raise UsageError(f"unknown function {tok!r} in --support") from None
    return out


def cmd_diagnose(args, conf):
    v = _merge(conf.get("run", {}), args, RUN_KEYS)
    cfg = _run_config(v)
    if "support" not in v:
        raise UsageError("diagnose needs --support")
    cloud, dictionary = _load_dataset(args)
    S = _parse_support(v["support"], dictionary.names)
    if len(S) != cfg.d or len(set(S)) != len(S) or not all(0 <= j < dictionary.p for j in S):
        raise UsageError(f"--support must list {cfg.d} distinct functions of {dictionary.p}, got {S}")
    X, norms = _design(cloud, dictionary, cfg)
    report = sampled_conditions(X, S, norms, v.get("lambda"))
    out = _out_dir(args)
    doc = report.to_dict()
    doc["support_names"] = [dictionary.names[j] for j in S]
    io.write_json(out / "diagnostics.json", doc)
    write_cosine_csv(report.cosine_matrix, out / "cosine.csv", dictionary.names)
    for key in ("mu_S", "nu_S", "b_S", "phi_S", "Gamma", "delta"):
        print(f"{key:6s} {doc[key]}")
    print("flags", report.condition_flags)
    for note in report.notes:
        print("note:", note)
    return 0


def cmd_check_gradients(args, conf):
    v = _merge(conf.get("run", {}), args, RUN_KEYS)
    cloud, dictionary = _load_dataset(args)
    pts = sample_points(dictionary, cloud, n_points=v.get("n_points", 100), seed=v.get("seed", 0))
    errs = gradient_errors(dictionary, pts, h=v.get("h", 1e-5))
    report = {"tolerance": GRADIENT_TOL, "n_points": len(pts),
              "functions": [{"name": n, "max_rel_error": float(e)} for n, e in zip(dictionary.names, errs)]}
    ok = bool(np.all(errs <= GRADIENT_TOL))
    if isinstance(dictionary, MolecularDictionary):
        push = pushforward_errors(dictionary, pts[: min(len(pts), 50)], seed=v.get("seed", 0))
        report["pushforward_tolerance"] = PUSHFORWARD_TOL
        for row, e in zip(report["functions"], push):
            row["max_pushforward_error"] = float(e)
        ok = ok and bool(np.all(push <= PUSHFORWARD_TOL))
    report["passed"] = ok
    if args.out:
        io.write_json(_out_dir(args) / "gradients.json", report)
    for row in report["functions"]:
        extra = f"  pushforward {row['max_pushforward_error']:.2e}" if "max_pushforward_error" in row else ""
        print(f"{row['name']:>16s}  {row['max_rel_error']:.2e}{extra}")
    if not ok:
        print("gradient check FAILED", file=sys.stderr)
        return 1
    return 0


# ------------------------------------------------------------------ parser

def _add_run_flags(p, extra=()):
    p.add_argument("--data", required=True, help="dataset directory written by 'generate'")
    p.add_argument("--no-verify", action="store_true", help="skip manifest hash verification")
    p.add_argument("--d", type=int, help="intrinsic dimension")
    p.add_argument("--r-n", dest="r_n", type=float, help="neighborhood radius")
    p.add_argument("--epsilon-n", dest="epsilon_n", type=float, help="kernel bandwidth (default r_n)")
    p.add_argument("--n-prime", dest="n_prime", type=int, help="subsample size")
    p.add_argument("--seed", type=int)
    p.add_argument("--kernel", choices=("gaussian", "epanechnikov", "constant"))
    p.add_argument("--rule", choices=("binary-search", "last-surviving"))
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--normalize-over", dest="normalize_over", choices=("subsample", "all"))
    for flag, kw in extra:
        p.add_argument(flag, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tslasso", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic or featurized dataset")
    g.add_argument("--config", help="INI file with a [generate] section")
    g.add_argument("--out", required=True)
    g.add_argument("--generator", choices=("swiss-roll", "rigid-ethanol", "molecular"))
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--ambient-dim", dest="ambient_dim", type=int)
    g.add_argument("--sigma", type=float)
    g.add_argument("--grid", choices=("uniform-grid", "uniform-random"))
    g.add_argument("--d-features", dest="d_features", type=int, help="feature dimension D after SVD")
    g.add_argument("--noise-space", dest="noise_space", choices=("atoms", "features"))
    g.add_argument("--freeze-g2", dest="freeze_g2", action="store_const", const=True)
    g.add_argument("--configs", help="configuration matrix for generator 'molecular'")
    g.add_argument("--format", choices=("csv", "raw"))
    g.add_argument("--header", action="store_const", const=True, help="skip one header line in CSV input")
    g.add_argument("--bonds", help="bond diagram JSON for generator 'molecular'")
    g.set_defaults(func=cmd_generate)

    common = [("--config", {"help": "INI file with a [run] section"}),
              ("--out", {"required": True, "help": "output directory"})]
    r = sub.add_parser("run", help="select a support once")
    _add_run_flags(r, common)
    r.set_defaults(func=cmd_run)

    rep = sub.add_parser("replicate", help="repeat 'run' over seeds and count supports")
    _add_run_flags(rep, common + [("--omega", {"type": int, "help": "number of replicates"}),
                                  ("--threads", {"type": int, "help": "worker threads"})])
    rep.set_defaults(func=cmd_replicate)

    pa = sub.add_parser("path", help="trace the regularization path on a geometric grid")
    _add_run_flags(pa, common + [("--n-grid", {"dest": "n_grid", "type": int}),
                                 ("--min-ratio", {"dest": "min_ratio", "type": float})])
    pa.set_defaults(func=cmd_path)

    dg = sub.add_parser("diagnose", help="sampled incoherence quantities for a support")
    _add_run_flags(dg, common + [("--support", {"help": "comma-separated indices or names"}),
                                 ("--lambda", {"dest": "lambda", "type": float})])
    dg.set_defaults(func=cmd_diagnose)

    cg = sub.add_parser("check-gradients", help="finite-difference check of dictionary gradients")
    cg.add_argument("--data", required=True)
    cg.add_argument("--config")
    cg.add_argument("--out")
    cg.add_argument("--no-verify", action="store_true")
    cg.add_argument("--n-points", dest="n_points", type=int)
    cg.add_argument("--seed", type=int)
    cg.add_argument("--h", type=float, help="finite-difference step")
    cg.set_defaults(func=cmd_check_gradients)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        conf = read_config(args.config) if getattr(args, "config", None) else {}
        return args.func(args, conf)
    except (UsageError, ConfigError) as err:
        print(f"tslasso {args.command}: error: {err}", file=sys.stderr)
        return 2
    except RankDeficient as err:
        pts = f" (points {err.points[:10]})" if err.points else ""
        print(f"tslasso {args.command}: {getattr(err, 'stage', 'error')}: {err}{pts}", file=sys.stderr)
        return 1
    except (TSLassoError, FileNotFoundError, OSError) as err:
        stage = getattr(err, "stage", "error")
        print(f"tslasso {args.command}: {stage}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
