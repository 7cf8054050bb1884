"""Command-line pipeline: config loading, orchestration and data emission.

Subcommands cover the whole chain: admissibility checks, analytical
symmetry and dispersion sets, the freezing run, the eigensolve with
classification, decay fitting, and canned figure datasets.  All numeric
CSV output is full-precision float64 and byte-stable under a fixed seed;
timestamps live only in JSON sidecars.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:            # Python < 3.11
    import tomli as tomllib

from . import coeffs as C
from . import discretize as X
from . import dispersion as D
from . import freeze as F
from . import model_qcgl as Q
from . import spectra as SP
from . import symmetry as SY

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


# -- schema ----------------------------------------------------------------

_SCHEMA = {
    "seed": int,
    "model": {"alpha": list, "beta": list, "gamma": list, "delta": list},
    "grid": {"d": int, "R": float, "N": int},
    "symmetry": {"rates": list},
    "freeze": {
        "dt": float, "t_end": float, "phase_tolerance": float, "scheme": str,
        "initial_kind": str, "initial_amplitude": float, "initial_width": float,
        "initial_path": str, "warmup_t": float, "snapshot_every": int,
    },
    "eigs": {"target": list, "k": int, "tol_point": float, "tol_ess": float},
    "dispersion": {"n_box": int, "n_eta": int, "re_min": float},
    "conditions": {"p_values": list},
    "decay": {"p": float, "window": list},
    "output": {"directory": str},
}

_DEFAULTS = {
    "seed": 0,
    "model": {"alpha": [0.5, 0.5], "beta": [2.5, 1.0],
              "gamma": [-1.0, -0.1], "delta": [-0.5, 0.0]},
    "grid": {"d": 2, "R": 16.0, "N": 128},
    "symmetry": {"rates": [1.027]},
    "freeze": {"dt": 5e-3, "t_end": 300.0, "phase_tolerance": 1e-6,
               "scheme": "imex-euler", "initial_kind": "vortex",
               "initial_amplitude": 3.0, "initial_width": 4.0,
               "warmup_t": 1.0, "snapshot_every": 0},
    "eigs": {"target": [0.1, 0.0], "k": 12, "tol_point": 0.05, "tol_ess": 0.05},
    "dispersion": {"n_box": 5, "n_eta": 400, "re_min": -3.0},
    "conditions": {"p_values": [2.0, 3.0, 4.0, 5.0, 6.0]},
    "decay": {"p": 2.0, "window": [2.0, 12.0]},
    "output": {"directory": "out"},
}


def _validate(data: dict, schema: dict, path: str = "") -> dict:
    out = {}
    for key, val in data.items():
        here = f"{path}{key}"
        if key not in schema:
            raise ConfigError(f"unknown config key {here!r}")
        expected = schema[key]
        if isinstance(expected, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{here!r} must be a table")
            out[key] = _validate(val, expected, here + ".")
        elif expected is float:
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise ConfigError(f"{here!r} must be a number")
            out[key] = float(val)
        elif not isinstance(val, expected) or isinstance(val, bool) is not (expected is bool):
            raise ConfigError(f"{here!r} must be {expected.__name__}")
        else:
            out[key] = val
    return out


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        out[k] = _merge(base.get(k, {}), v) if isinstance(v, dict) else v
    return out


def _parse_override(text: str) -> dict:
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key.path=value")
    keypath, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = value
    for part in reversed(keypath.strip().split(".")):
        node = {part: node}
    return node


def load_config(path=None, overrides=(), out_dir=None, seed=None) -> dict:
    data = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    # deep copy so callers mutating the result never touch the defaults
    cfg = _merge(copy.deepcopy(_DEFAULTS), _validate(data, _SCHEMA))
    for text in overrides:
        cfg = _merge(cfg, _validate(_parse_override(text), _SCHEMA))
    if out_dir is not None:
        cfg = _merge(cfg, {"output": {"directory": str(out_dir)}})
    if seed is not None:
        cfg = _merge(cfg, {"seed": int(seed)})
    if cfg["grid"]["d"] not in (2, 3):
        raise ConfigError("grid.d must be 2 or 3")
    return cfg


# -- assembly helpers ------------------------------------------------------

def _complex(pair) -> complex:
    if isinstance(pair, (int, float)):
        return complex(pair)
    if len(pair) != 2:
        raise ConfigError("complex values are [re, im] pairs")
    return complex(float(pair[0]), float(pair[1]))


def _params(cfg: dict) -> Q.QcglParams:
    m = cfg["model"]
    try:
        return Q.QcglParams(alpha=_complex(m["alpha"]), beta=_complex(m["beta"]),
                            gamma=_complex(m["gamma"]), delta=_complex(m["delta"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _grid(cfg: dict) -> X.Grid:
    g = cfg["grid"]
    try:
        return X.Grid(d=g["d"], R=g["R"], N=g["N"])
    except X.GridError as exc:
        raise ConfigError(str(exc)) from exc


def _velocity_matrix(cfg: dict) -> np.ndarray:
    """Skew velocity matrix from config rates.

    One rate per coordinate plane (d(d-1)/2 entries), or one per 2x2
    diagonal rotation block (floor(d/2) entries) for block-diagonal sweeps.
    """
    d = cfg["grid"]["d"]
    rates = [float(r) for r in cfg["symmetry"]["rates"]]
    n_planes = d * (d - 1) // 2
    if len(rates) == n_planes:
        return F.velocity_matrix(d, rates)
    if len(rates) == d // 2:
        S = np.zeros((d, d))
        for l, r in enumerate(rates):
            S[2 * l, 2 * l + 1], S[2 * l + 1, 2 * l] = r, -r
        return S
    raise ConfigError(
        f"symmetry.rates needs {n_planes} (per plane) or {d // 2} "
        f"(per block) entries for d={d}, got {len(rates)}"
    )


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (int, float, np.floating))
                        else x for x in row])


def _sidecar(path: Path, payload: dict):
    payload = dict(payload)
    payload["written_at"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    path.write_text(json.dumps(payload, indent=2))


# -- commands --------------------------------------------------------------

def cmd_check(cfg: dict) -> int:
    params = _params(cfg)
    d = cfg["grid"]["d"]
    sc = Q.system_coefficients(params, d, _velocity_matrix(cfg))
    out = _out_dir(cfg)
    reports = []
    for p in cfg["conditions"]["p_values"]:
        rep = C.check_conditions(sc, float(p), seed=cfg["seed"])
        reports.append({"p": float(p), "report": rep.to_json_obj()})
        flag = "pass" if rep.all_pass else "FAIL"
        print(f"p={p}: {flag}")
    rng = C.admissible_p_range(sc.A)
    print(f"admissible p-range: ({rng[0]:.4f}, {rng[1]:.4f})" if rng else
          "admissible p-range: none (antieigenvalue <= 0)")
    consts = C.spectral_constants(sc)
    (out / "conditions.json").write_text(json.dumps({
        "reports": reports,
        "p_range": list(rng) if rng else None,
        "constants": {"a0": consts.a0, "a1": consts.a1, "a_min": consts.a_min,
                      "a_max": consts.a_max, "b0": consts.b0},
    }, indent=2))
    return EXIT_OK if all(r["report"]["all_pass"] for r in reports) else EXIT_NUMERICAL


def cmd_symmetry(cfg: dict) -> int:
    S = _velocity_matrix(cfg)
    triples = SY.symmetry_eigentriples(S)
    sset = SY.symmetry_set(S)
    out = _out_dir(cfg)
    (out / "symmetry.json").write_text(json.dumps({
        "set": [{"re": v.real, "im": v.imag, "multiplicity": m} for v, m in sset],
        "triples": [t.to_json_obj() for t in triples],
    }, indent=2))
    _write_csv(out / "symmetry_set.csv", ["re", "im", "multiplicity"],
               [(v.real, v.imag, m) for v, m in sset])
    print(f"{len(triples)} eigentriples, set size {len(sset)} "
          f"(total multiplicity {sum(m for _, m in sset)})")
    return EXIT_OK


def cmd_dispersion(cfg: dict) -> int:
    params = _params(cfg)
    S = _velocity_matrix(cfg)
    sc = Q.system_coefficients(params, cfg["grid"]["d"], S)
    eta = D.default_eta_grid(sc, re_min=cfg["dispersion"]["re_min"],
                             n=cfg["dispersion"]["n_eta"])
    curves, tips = D.sample_dispersion_set(
        D.DispersionQuery(coeffs=sc, eta_grid=eta, n_box=cfg["dispersion"]["n_box"]))
    out = _out_dir(cfg)
    rows = []
    for curve in curves:
        tag = ";".join(map(str, curve.n))
        for e, lams in zip(curve.eta, curve.lam):
            for b, lam in enumerate(lams):
                rows.append((tag, e, b, lam.real, lam.imag))
    _write_csv(out / "dispersion_curves.csv",
               ["n", "eta", "branch", "re", "im"], rows)
    _write_csv(out / "dispersion_tips.csv", ["re", "im"],
               [(t.real, t.imag) for t in tips])
    sigma = SY.skew_eigendecomposition(S).sigma
    verdict = D.density_classifier(sigma) if len(sigma) else "discrete-subgroup"
    _sidecar(out / "dispersion.json", {
        "density_verdict": verdict,
        "n_curves": len(curves),
        "max_re": max(r[3] for r in rows),
    })
    print(f"{len(curves)} curves, {len(tips)} tips, density: {verdict}")
    return EXIT_OK


def cmd_freeze(cfg: dict) -> int:
    params = _params(cfg)
    grid = _grid(cfg)
    fz = cfg["freeze"]
    out = _out_dir(cfg)
    config = F.FreezeConfig(
        grid=grid, dt=fz["dt"], t_end=fz["t_end"],
        phase_tolerance=fz["phase_tolerance"], scheme=fz["scheme"],
        initial_kind=fz["initial_kind"], initial_amplitude=fz["initial_amplitude"],
        initial_width=fz["initial_width"], initial_path=fz.get("initial_path"),
        warmup_t=fz["warmup_t"], snapshot_every=fz["snapshot_every"],
        snapshot_dir=str(out / "snapshots") if fz["snapshot_every"] else None,
    )
    result = F.run_freezing(config, Q.diffusion_matrix(params),
                            lambda u: Q.f_real(u, params),
                            df=lambda u: Q.jacobian_Df(u, params))
    X.save_field(out / "profile.bin", result.profile, grid,
                 components=["u_re", "u_im"])
    F.write_history_csv(out / "velocity_history.csv", result.history, grid.d)
    _sidecar(out / "freeze.json", {
        "converged": result.converged,
        "t_final": result.final.t,
        "rotation_rates": list(map(float, result.final.s)),
        "translation_rates": list(map(float, result.final.tau)),
        "vt_norm": result.final.vt_norm,
    })
    state = "converged" if result.converged else "NOT converged"
    print(f"{state}: t={result.final.t:.2f}, s={result.final.s}, "
          f"vt_norm={result.final.vt_norm:.3e}")
    return EXIT_OK if result.converged else EXIT_NUMERICAL


def _load_profile(cfg: dict):
    out = _out_dir(cfg)
    path = out / "profile.bin"
    if not path.exists():
        raise ConfigError(f"no profile at {path}; run the freeze command first")
    v, grid = X.load_field(path)
    meta = json.loads((out / "freeze.json").read_text())
    return np.real(v), grid, meta


def cmd_eigs(cfg: dict) -> int:
    params = _params(cfg)
    v, grid, meta = _load_profile(cfg)
    s = meta["rotation_rates"]
    S = F.velocity_matrix(grid.d, s)
    reaction = Q.jacobian_Df(np.moveaxis(v, 0, -1), params)
    op = X.assemble_linearized(grid, Q.diffusion_matrix(params), S, reaction)

    sc = Q.system_coefficients(params, grid.d, S)
    sset = SY.symmetry_set(S)
    eta = D.default_eta_grid(sc, n=cfg["dispersion"]["n_eta"])
    curves, _ = D.sample_dispersion_set(
        D.DispersionQuery(coeffs=sc, eta_grid=eta, n_box=cfg["dispersion"]["n_box"]))

    target = _complex(cfg["eigs"]["target"])
    results = SP.shift_invert_eigs(op, target, cfg["eigs"]["k"], seed=cfg["seed"])
    SP.classify_spectrum(results, sset, curves,
                         cfg["eigs"]["tol_point"], cfg["eigs"]["tol_ess"])
    out = _out_dir(cfg)
    _write_csv(out / "spectrum.csv",
               ["re", "im", "residual", "class", "match_distance"],
               [(r.lam.real, r.lam.imag, r.residual, r.cls, r.match_distance)
                for r in results])
    for i, r in enumerate(results):
        X.save_field(out / f"eigvec_{i:02d}.bin", r.vector, grid)
    for r in results:
        print(f"lambda = {r.lam.real:+.6f}{r.lam.imag:+.6f}i  "
              f"res={r.residual:.2e}  {r.cls}")
    return EXIT_OK


def cmd_decay(cfg: dict) -> int:
    params = _params(cfg)
    v, grid, meta = _load_profile(cfg)
    fit = SP.fit_decay_rate(v, grid, window=tuple(cfg["decay"]["window"]))
    sc = Q.system_coefficients(params, grid.d,
                               F.velocity_matrix(grid.d, meta["rotation_rates"]))
    consts = C.spectral_constants(sc)
    p = cfg["decay"]["p"]
    mu2, mu4 = SP.decay_bounds(consts, 0.0 + 0.0j, p, grid.d)
    out = _out_dir(cfg)
    payload = {
        "mu_fit": fit.mu_fit, "c_fit": fit.c_fit, "r2": fit.r2,
        "window": list(fit.window), "p": p,
        "mu2_sup": mu2, "mu4_sup": mu4,
        "within_bound": bool(0.0 < fit.mu_fit <= mu2),
        "note": "suprema are open bounds (epsilon -> 1 limits), not attained",
    }
    (out / "decay.json").write_text(json.dumps(payload, indent=2))
    print(f"mu_fit={fit.mu_fit:.4f} (r2={fit.r2:.4f}), "
          f"mu2_sup={mu2:.4f}, mu4_sup={mu4:.4f}")
    return EXIT_OK


def cmd_reproduce(cfg: dict, figure: str) -> int:
    out = _out_dir(cfg)
    if figure == "fig1":
        # three dispersion panels: single rate, rationally dependent pair,
        # irrationally dependent pair
        panels = {"a": [1.027], "b": [1.0, 1.5], "c": [1.0, float(np.e / 2.0)]}
        for tag, rates in panels.items():
            sub = _merge(cfg, {"symmetry": {"rates": rates},
                               "grid": {"d": 2 * len(rates)},
                               "output": {"directory": str(out / f"fig1{tag}")}})
            cmd_dispersion(sub)
        return EXIT_OK
    if figure == "fig2":
        # derivable from the symmetry set alone, no simulation
        sub = _merge(cfg, {"symmetry": {"rates": [0.6888, -0.0043, -0.0043]},
                           "grid": {"d": 3},
                           "output": {"directory": str(out / "fig2")}})
        return cmd_symmetry(sub)
    if figure in ("fig4", "fig5"):
        # the reference originals are 3D; desk scale runs the 2D analogue
        sub = _merge(cfg, {"output": {"directory": str(out / figure)}})
        notice = {"notice": "2D analogue; the original 3D computation "
                            "exceeds desk-scale resources"}
        (Path(sub["output"]["directory"]).mkdir(parents=True, exist_ok=True))
        rc = cmd_freeze(sub)
        if rc != EXIT_OK:
            return rc
        rc = cmd_eigs(sub) if figure == "fig4" else cmd_decay(sub)
        (Path(sub["output"]["directory"]) / "notice.json").write_text(
            json.dumps(notice, indent=2))
        return rc
    raise ConfigError(f"unknown figure {figure!r} (fig1|fig2|fig4|fig5)")


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rotwave")
    ap.add_argument("--config", type=str, default=None)
    ap.add_argument("--out", type=str, default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--override", action="append", default=[],
                    metavar="KEY.PATH=VALUE")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("check", "symmetry", "dispersion", "freeze", "eigs", "decay"):
        sub.add_parser(name)
    rp = sub.add_parser("reproduce")
    rp.add_argument("figure", choices=["fig1", "fig2", "fig4", "fig5"])
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.override, args.out, args.seed)
    except (ConfigError, OSError, tomllib.TOMLDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if args.command == "check":
            return cmd_check(cfg)
        if args.command == "symmetry":
            return cmd_symmetry(cfg)
        if args.command == "dispersion":
            return cmd_dispersion(cfg)
        if args.command == "freeze":
            return cmd_freeze(cfg)
        if args.command == "eigs":
            return cmd_eigs(cfg)
        if args.command == "decay":
            return cmd_decay(cfg)
        if args.command == "reproduce":
            return cmd_reproduce(cfg, args.figure)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (F.FreezeError, SP.SpectraError, D.DispersionError, SY.SymmetryError,
            C.CoefficientError, X.GridError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
