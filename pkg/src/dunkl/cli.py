"""Command-line front end.

Subcommands: rootsys, eval, verify, cover, asymp. Every run is determined
by its flags plus an optional flat key=value config file (flags win).
Artifacts are JSON/CSV written atomically; numbers carry 17 significant
digits so reruns are byte-identical. Exit codes: 0 ok, 1 verification
failure, 2 bad configuration, 3 I/O failure, 4 numeric failure.
Set DUNKL_THREADS to parallelize batched sweeps.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import asymptotics, geometry, jsonio, kernel, kernel1d, rootsys, verify
from .rootsys import ConfigError, NumericError

_FAMILIES = ("z2n", "a2", "b2", "i2m")


@dataclasses.dataclass
class RunConfig:
    family: str = "b2"
    n: int | None = None
    m: int | None = None
    multiplicities: tuple = (1.0, 1.0)
    delta: float = 0.3
    seed: int = 2026
    samples: int = 10000
    t: float = 1.0
    t_max: float = 1000.0
    t_start: float = 8.0
    tol: float = 1e-2
    which: str = "all"
    g_index: int = 0
    x: tuple | None = None
    y: tuple | None = None
    imaginary: bool = False
    kind: str = "ray"
    rate: float = 0.0
    dir1: tuple | None = None
    dir2: tuple | None = None
    out: str | None = None
    csv_out: str | None = None


def _parse_floats(text: str) -> tuple:
    try:
        return tuple(float(p) for p in text.split(",") if p.strip() != "")
    except ValueError as exc:
        raise ConfigError("cannot parse number list %r" % text) from exc


def read_config_file(path: str) -> dict:
    """Flat key = value lines; # starts a comment; later keys win."""
    data: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("config line %d is not key = value" % lineno)
            key, val = line.split("=", 1)
            data[key.strip()] = val.strip()
    return data


_CONVERTERS = {
    "family": str, "n": int, "m": int, "k": _parse_floats,
    "delta": float, "seed": int, "samples": int, "t": float,
    "t_max": float, "t_start": float, "tol": float, "which": str,
    "g_index": int, "x": _parse_floats, "y": _parse_floats,
    "imaginary": lambda s: s.lower() in ("1", "true", "yes"),
    "kind": str, "rate": float, "dir1": _parse_floats,
    "dir2": _parse_floats, "out": str, "csv_out": str,
}

_FIELD_FOR_KEY = {"k": "multiplicities"}


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    file_values: dict = {}
    if getattr(args, "config", None):
        raw = read_config_file(args.config)
        for key, text in raw.items():
            if key not in _CONVERTERS:
                raise ConfigError("unknown config key %r" % key)
            file_values[key] = _CONVERTERS[key](text)
    for key in _CONVERTERS:
        field = _FIELD_FOR_KEY.get(key, key)
        flag = getattr(args, key, None)
        if flag is not None:
            if isinstance(flag, str) and key in ("k", "x", "y", "dir1", "dir2"):
                flag = _parse_floats(flag)
            setattr(cfg, field, flag)
        elif key in file_values:
            setattr(cfg, field, file_values[key])
    if cfg.family not in _FAMILIES:
        raise ConfigError("family must be one of %s" % (_FAMILIES,))
    return cfg


def _orbit_count(cfg: RunConfig) -> int:
    if cfg.family == "z2n":
        if cfg.n is None:
            raise ConfigError("z2n needs --n")
        return cfg.n
    if cfg.family == "b2":
        return 2
    if cfg.family == "a2":
        return 1
    if cfg.m is None:
        raise ConfigError("i2m needs --m")
    return 1 if cfg.m % 2 == 1 else 2


def _build_system(cfg: RunConfig) -> rootsys.RootSystem:
    mults = cfg.multiplicities
    orbits = _orbit_count(cfg)
    if len(mults) == 1 and orbits > 1:
        mults = mults * orbits  # one value broadcasts to every orbit
    return rootsys.build_root_system(cfg.family, n=cfg.n, m=cfg.m,
                                     multiplicities=mults)


def cmd_rootsys(cfg: RunConfig) -> int:
    rs = _build_system(cfg)
    group = rootsys.generate_group(rs)
    lam = rootsys.dual_basis(rs)
    print("family       %s (rank %d)" % (rs.family, rs.rank))
    print("group order  %d" % len(group))
    print("gamma_k      %.17g" % rs.gamma_k)
    print("orbits       %s  k=%s" % (", ".join(rs.orbit_names),
                                     list(rs.multiplicities)))
    for i, root in enumerate(rs.positive_roots):
        tag = "*" if i in rs.simple_indices else " "
        print("root %2d %s  %s" % (i, tag, np.array2string(root, precision=6)))
    for i, v in enumerate(lam):
        print("dual %2d    %s" % (i, np.array2string(v, precision=6)))
    if cfg.out:
        jsonio.write_json(cfg.out, {
            "family": rs.family,
            "rank": rs.rank,
            "order": len(group),
            "gamma_k": rs.gamma_k,
            "k": list(rs.multiplicities),
            "orbits": list(rs.orbit_names),
            "roots": [list(map(float, r)) for r in rs.positive_roots],
            "simple": [int(i) for i in rs.simple_indices],
            "dual_basis": [list(map(float, v)) for v in lam],
        })
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    if cfg.x is None or cfg.y is None:
        raise ConfigError("eval needs --x and --y")
    rs = _build_system(cfg)
    ctx = kernel.EvalContext.build(rs)
    x = np.asarray(cfg.x, dtype=float)
    y = np.asarray(cfg.y, dtype=float)
    if x.shape != (rs.rank,) or y.shape != (rs.rank,):
        raise ConfigError("x and y must have %d coordinates" % rs.rank)
    if cfg.imaginary:
        ov = kernel.eval_imaginary(ctx, x, y, cfg.t)
        scaled, exponent, values = False, 0.0, ov.values
    else:
        ev = kernel.eval_orbit(ctx, x, y.astype(complex), cfg.t)
        scaled, exponent, values = ev.scaled, ev.scale_exponent, ev.result.values
    for i, (g, z) in enumerate(zip(ctx.group, values)):
        word = "".join("s%d" % w for w in g.word) if g.word else "id"
        print("g[%2d] %-12s  %+.12e %+.12ej" % (i, word, z.real, z.imag))
    if scaled:
        print("scaled by exp(%.17g)" % exponent)
    if cfg.out:
        jsonio.write_json(cfg.out, {
            "family": rs.family,
            "k": list(rs.multiplicities),
            "x": list(map(float, x)),
            "y": list(map(float, y)),
            "t": cfg.t,
            "imaginary": cfg.imaginary,
            "scaled": scaled,
            "scale_exponent": float(exponent),
            "values": [[float(z.real), float(z.imag)] for z in values],
        })
    return 0


_CHECKS = ("ez", "boundedness", "polytope", "main", "corollary", "d1")


def _run_check(name: str, cfg: RunConfig, rs, group) -> verify.VerificationReport:
    if name == "ez":
        return verify.verify_ez(rs, group, cfg.samples, cfg.seed)
    if name == "boundedness":
        lam = rootsys.dual_basis(rs)
        center = lam.sum(axis=0)
        center = center / np.linalg.norm(center)
        x = np.asarray(cfg.x, dtype=float) if cfg.x else center
        y = np.asarray(cfg.y, dtype=float) if cfg.y else center
        return verify.verify_lemma_boundedness(rs, group, x, y, cfg.g_index,
                                               T=cfg.t_max)
    if name in ("polytope", "main"):
        cov = geometry.lemma_covering(rs, cfg.delta, seed=cfg.seed,
                                      group=group)
        if name == "polytope":
            return verify.verify_lemma_polytope(rs, group, cov.polytope,
                                                cfg.samples, "n", cfg.seed)
        return verify.verify_main_theorem(rs, group, cov.polytope,
                                          cfg.samples, cfg.seed)
    if name == "corollary":
        return verify.verify_corollary_imaginary(rs, group, cfg.delta,
                                                 cfg.samples, cfg.seed)
    if name == "d1":
        return kernel1d.check_d1_estimates(rs.multiplicities[0],
                                           cfg.samples, cfg.seed)
    raise ConfigError("unknown check %r" % name)


def cmd_verify(cfg: RunConfig) -> int:
    rs = _build_system(cfg)
    group = rootsys.generate_group(rs)
    names = list(_CHECKS) if cfg.which == "all" else [cfg.which]
    for name in names:
        if name not in _CHECKS:
            raise ConfigError("--which must be one of %s or all" % (_CHECKS,))
    reports = [_run_check(name, cfg, rs, group) for name in names]
    for rep in reports:
        print("%-22s sup=%.6e  %s" % (rep.check_name, rep.empirical_sup,
                                      "pass" if rep.passed else "FAIL"))
    if cfg.out:
        payload = (reports[0].to_json_dict() if len(reports) == 1
                   else {"reports": [r.to_json_dict() for r in reports]})
        jsonio.write_json(cfg.out, payload)
    return 0 if all(r.passed for r in reports) else 1


def cmd_cover(cfg: RunConfig) -> int:
    rs = _build_system(cfg)
    group = rootsys.generate_group(rs)
    cov = geometry.lemma_covering(rs, cfg.delta, seed=cfg.seed, group=group)
    print("p0      %d" % cov.p0)
    print("margin  %.17g (certified=%s)" % (cov.margin,
                                            cov.details["certified"]))
    print("samples %d" % cov.samples)
    if cfg.out:
        jsonio.write_json(cfg.out, {
            "p0": cov.p0,
            "generators": [list(map(float, v))
                           for v in cov.polytope.generators],
            "margin": cov.margin,
            "samples": cov.samples,
        })
    return 0


def _curve_from_config(cfg: RunConfig, rs, group) -> asymptotics.AdmissibleCurvePair:
    if cfg.dir1 is not None and cfg.dir2 is not None:
        dirs = np.array([cfg.dir1, cfg.dir2], dtype=float)
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    else:
        rng = np.random.default_rng(cfg.seed)
        spec = geometry.ConeSpec(delta=cfg.delta)
        dirs = geometry.sample_cap_directions(rs, group, spec, 2, rng)
    return asymptotics.AdmissibleCurvePair(
        kind=cfg.kind, directions=dirs, rotation_rate=cfg.rate,
        delta=cfg.delta, t_min=min(1.0, cfg.t_start))


def cmd_asymp(cfg: RunConfig) -> int:
    rs = _build_system(cfg)
    group = rootsys.generate_group(rs)
    ctx = kernel.EvalContext.build(rs, group)
    curve = _curve_from_config(cfg, rs, group)
    v, diag = asymptotics.estimate_v(ctx, curve, cfg.tol,
                                     t_start=cfg.t_start)
    print("converged %s after %d checkpoints"
          % (diag["converged"], len(diag["checkpoints"])))
    for i, z in enumerate(v.values):
        print("v[%2d]  %+.10f %+.10fj" % (i, z.real, z.imag))
    if cfg.out:
        jsonio.write_json(cfg.out, {
            "v": {str(i): [float(z.real), float(z.imag)]
                  for i, z in enumerate(v.values)},
            "tol": diag["tol"],
            "converged": diag["converged"],
        })
    if cfg.csv_out:
        size = len(v.values)
        header = ["t"]
        for i in range(size):
            header += ["re_F%d" % i, "im_F%d" % i]
        jsonio.write_csv(cfg.csv_out, header, diag["table"])
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; flags win")
    p.add_argument("--family", choices=_FAMILIES)
    p.add_argument("--n", type=int, help="rank for z2n")
    p.add_argument("--m", type=int, help="dihedral index for i2m")
    p.add_argument("--k", help="multiplicities, comma-separated")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="JSON artifact path")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dunkl",
        description="Evaluate reflection-group kernels and verify their bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rootsys", help="print the root system and group")
    _add_common(p)

    p = sub.add_parser("eval", help="evaluate the kernel over one orbit")
    _add_common(p)
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--t", type=float)
    p.add_argument("--imaginary", action="store_true", default=None)

    p = sub.add_parser("verify", help="run verification checks")
    _add_common(p)
    p.add_argument("--which", help="|".join(_CHECKS) + "|all")
    p.add_argument("--samples", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--g-index", dest="g_index", type=int)
    p.add_argument("--x")
    p.add_argument("--y")

    p = sub.add_parser("cover", help="compute the covering cone index")
    _add_common(p)
    p.add_argument("--delta", type=float)

    p = sub.add_parser("asymp", help="estimate the limit vector of F")
    _add_common(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--t-start", dest="t_start", type=float)
    p.add_argument("--kind", choices=("ray", "rotating_ray"))
    p.add_argument("--rate", type=float)
    p.add_argument("--dir1")
    p.add_argument("--dir2")
    p.add_argument("--csv-out", dest="csv_out")
    return parser


_COMMANDS = {
    "rootsys": cmd_rootsys,
    "eval": cmd_eval,
    "verify": cmd_verify,
    "cover": cmd_cover,
    "asymp": cmd_asymp,
}


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("i/o error: %s" % exc, file=sys.stderr)
        return 3
    except NumericError as exc:
        print("numeric error: %s" % exc, file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
