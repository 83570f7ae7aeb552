"""Command-line front-end.

Subcommands: ``compound`` (matrix compounds of a matrix file), ``certify``
(run the sufficient-condition checks on a system config), ``simulate``
(trajectories plus optional volume tracking, CSV + JSON outputs), and
``demo-hopfield`` (the built-in end-to-end demonstration).

Exit codes are a stable contract: 0 pass, 1 certified fail, 2 parse/config
error, 3 capacity, 4 missing nonlinearity bounds, 5 internal.
"""

import argparse
import dataclasses
import json
import os
import sys as _sys
import tempfile

import numpy as np

from . import __version__
from ._backend import BACKEND_NAME
from .certify import (
    Certificate,
    check_network_k_contraction,
    check_theorem1,
    find_scalar_gamma_p,
    gain_condition_bound,
    max_feasible_eta1,
)
from .compound import additive_compound, as_matrix, multiplicative_compound
from .config import DEFAULT_TOL, Tolerances
from .errors import (
    CapacityError,
    InvalidParameterError,
    KContractError,
    NotPositiveDefiniteError,
    ParseError,
    ShapeError,
    UnboundedNonlinearityError,
)
from .measures import ScalingQ, symmetric_sqrt
from .simulate import (
    classify_convergence,
    estimate_decay_rate,
    hopfield_symmetric_equilibria,
    integrate_ensemble,
)
from .systems import LurieSystem, NetworkSystem, Nonlinearity
from .errors import InsufficientDataError, WrongStructureError

_MATRIX = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
}
_VECTOR = {"type": "array", "minItems": 2, "items": {"type": "number"}}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "nonlinearity"],
    "properties": {
        "kind": {"enum": ["lurie", "network"]},
        "a": _MATRIX,
        "b": _MATRIX,
        "c": _MATRIX,
        "alpha": {"type": "number"},
        "w": _MATRIX,
        "nonlinearity": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family"],
            "properties": {
                "family": {"enum": ["scaled_tanh", "linear", "piecewise"]},
                "gain": {"type": "number"},
                "dim": {"type": "integer", "minimum": 1},
                "k_matrix": _MATRIX,
                "table_x": _VECTOR,
                "table_y": _VECTOR,
                "jac_norm_bound": {"type": "number", "exclusiveMinimum": 0},
                "jac_topk_sq_bound": {
                    "type": "object",
                    "additionalProperties": False,
                    "patternProperties": {"^[1-9][0-9]*$": {"type": "number"}},
                },
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k": {"type": "integer", "minimum": 1},
                "p": {"oneOf": [_MATRIX, {"const": "scalar-search"}]},
                "eta1": {"type": "number"},
                "eta2": {"type": "number"},
                "tolerances": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        f.name: {"type": "number"}
                        for f in dataclasses.fields(Tolerances)
                    },
                },
            },
        },
    },
}

_REQUIRED_BY_KIND = {"lurie": ("a", "b", "c"), "network": ("alpha", "w")}


def load_config(path: str) -> dict:
    """Parse and schema-validate a system config; no numerics run here."""
    import jsonschema

    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON in {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ParseError(f"invalid config: {exc.message}") from exc
    for key in _REQUIRED_BY_KIND[cfg["kind"]]:
        if key not in cfg:
            raise ParseError(f"{cfg['kind']} config requires field '{key}'")
    return cfg


def save_config(cfg: dict, path: str) -> None:
    _atomic_write(path, json.dumps(cfg, indent=2) + "\n")


def build_nonlinearity(section: dict) -> Nonlinearity:
    family = section["family"]
    declared = {}
    if "jac_norm_bound" in section:
        declared["declared_norm_bound"] = float(section["jac_norm_bound"])
    if "jac_topk_sq_bound" in section:
        declared["declared_topk_sq_bound"] = {
            int(k): float(v) for k, v in section["jac_topk_sq_bound"].items()
        }
    try:
        if family == "scaled_tanh":
            if "gain" not in section or "dim" not in section:
                raise ParseError("scaled_tanh needs 'gain' and 'dim'")
            phi = Nonlinearity.scaled_tanh(section["gain"], section["dim"])
        elif family == "linear":
            if "k_matrix" not in section:
                raise ParseError("linear nonlinearity needs 'k_matrix'")
            phi = Nonlinearity.linear(np.array(section["k_matrix"], dtype=float))
        else:
            for key in ("table_x", "table_y", "dim"):
                if key not in section:
                    raise ParseError(f"piecewise nonlinearity needs '{key}'")
            phi = Nonlinearity.piecewise_table(
                np.array(section["table_x"], dtype=float),
                np.array(section["table_y"], dtype=float),
                section["dim"],
            )
    except ValueError as exc:
        raise ParseError(f"invalid nonlinearity: {exc}") from exc
    if declared:
        phi = dataclasses.replace(phi, **declared)
    return phi


def build_system(cfg: dict):
    """Instantiate the configured system; dimension mismatches are parse errors."""
    phi = build_nonlinearity(cfg["nonlinearity"])
    try:
        if cfg["kind"] == "lurie":
            return LurieSystem(
                a=np.array(cfg["a"], dtype=float),
                b=np.array(cfg["b"], dtype=float),
                c=np.array(cfg["c"], dtype=float),
                phi=phi,
            )
        return NetworkSystem(
            alpha=float(cfg["alpha"]), w=np.array(cfg["w"], dtype=float), f=phi
        )
    except ValueError as exc:
        raise ParseError(f"inconsistent system dimensions: {exc}") from exc


def config_tolerances(cfg: dict) -> Tolerances:
    overrides = cfg.get("analysis", {}).get("tolerances", {})
    return dataclasses.replace(DEFAULT_TOL, **overrides) if overrides else DEFAULT_TOL


def _atomic_write(path: str, text: str) -> None:
    # temp file in the target directory so the final rename is atomic
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".kcontract-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trajectory_csv(path: str, traj) -> None:
    """CSV time series: header t,x1,...,xn[,logvol], volumes as natural log."""
    n = traj.states.shape[1]
    header = ["t"] + [f"x{i + 1}" for i in range(n)]
    cols = [traj.times] + [traj.states[:, i] for i in range(n)]
    if traj.volumes is not None:
        header.append("logvol")
        with np.errstate(divide="ignore"):
            cols.append(np.log(traj.volumes))
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(f"{v:.12g}" for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _provenance(tol: Tolerances, seed=None, dt=None, t_end=None) -> dict:
    return {
        "version": __version__,
        "backend": BACKEND_NAME,
        "seed": seed,
        "dt": dt,
        "t_end": t_end,
        "tolerances": tol.as_dict(),
    }


def _emit_report(report: dict, out) -> None:
    text = json.dumps(report, indent=2)
    if out:
        _atomic_write(out, text + "\n")
    else:
        print(text)


def _load_matrix_file(path: str) -> np.ndarray:
    try:
        if path.endswith(".csv"):
            return as_matrix(np.loadtxt(path, delimiter=",", ndmin=2), name="input")
        with open(path) as fh:
            return as_matrix(json.load(fh), name="input")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ParseError(f"not a numeric matrix: {exc}") from exc


def _certificate_line(cert: Certificate) -> str:
    verdict = "PASS" if cert.passed else "FAIL"
    if "condition_value" in cert.details:
        value = cert.details["condition_value"]
        threshold = cert.details["threshold"]
        rel = "<" if value < threshold else ">="
        margin = cert.margins["network_gap"]
        return (
            f"certify k={cert.k}: {verdict}  condition {value:.6g} {rel} "
            f"{threshold:.6g} (margin {margin:.6g})"
        )
    margins = ", ".join(f"{k}={v:.6g}" for k, v in cert.margins.items())
    return f"certify k={cert.k}: {verdict}  {margins}  rate={cert.rate_bound:.6g}"


def _lurie_scaling(analysis: dict, tol: Tolerances) -> ScalingQ:
    p_cfg = analysis.get("p")
    if not isinstance(p_cfg, list):
        raise ParseError("lurie certification requires an explicit 'p' matrix")
    try:
        return symmetric_sqrt(as_matrix(p_cfg, square=True, name="p"), tol)
    except (ValueError, NotPositiveDefiniteError) as exc:
        raise ParseError(f"analysis.p must be symmetric positive definite: {exc}") from exc


def certify_from_config(system, analysis: dict, k: int, tol: Tolerances) -> Certificate:
    """Dispatch certification: networks use the scalar search, Lurie systems
    the explicit-P check with etas taken from the config or maximized."""
    if isinstance(system, NetworkSystem):
        if isinstance(analysis.get("p"), list):
            raise ParseError(
                "network certification uses the scalar search; an explicit 'p' "
                "is only accepted for lurie configs"
            )
        return check_network_k_contraction(system, k, tol)
    scaling = _lurie_scaling(analysis, tol)
    eta1 = analysis.get("eta1")
    if eta1 is None:
        eta1 = max(0.0, max_feasible_eta1(system, k, scaling))
    eta2 = analysis.get("eta2")
    if eta2 is None:
        bound, _, _ = gain_condition_bound(system.phi, system.c, scaling, k)
        eta2 = max(0.0, -bound)
    return check_theorem1(system, k, scaling.p, eta1, eta2, tol)


def cmd_compound(args) -> int:
    matrix = _load_matrix_file(args.input)
    k = args.k
    result = (
        multiplicative_compound(matrix, k)
        if args.mode == "mult"
        else additive_compound(matrix, k)
    )
    text = json.dumps(result.body.tolist())
    if args.out:
        _atomic_write(args.out, text + "\n")
    else:
        print(text)
    return 0


def cmd_certify(args) -> int:
    cfg = load_config(args.config)
    system = build_system(cfg)
    tol = config_tolerances(cfg)
    analysis = cfg.get("analysis", {})
    k = args.k if args.k is not None else analysis.get("k")
    if k is None:
        raise ParseError("certification needs 'k' (config analysis.k or --k)")
    cert = certify_from_config(system, analysis, k, tol)
    print(_certificate_line(cert))
    report = {
        "certificate": cert.to_dict(),
        "simulation": None,
        "provenance": _provenance(tol),
    }
    _emit_report(report, args.out)
    return 0 if cert.passed else 1


def _parse_x0(text: str, n: int) -> np.ndarray:
    try:
        vec = np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise ParseError(f"--x0 must be comma-separated numbers: {exc}") from exc
    if vec.shape != (n,):
        raise ParseError(f"--x0 has {vec.shape[0]} entries, system needs {n}")
    return vec


def _simulation_summary(trajs, eq, classify_tol, k, files):
    entries = []
    rates = []
    for traj, path in zip(trajs, files):
        entry = {
            "file": path,
            "x0": [float(v) for v in traj.states[0]],
            "diverged": traj.diverged,
            "escape_time": traj.escape_time,
            "collapse_time": traj.collapse_time,
        }
        if eq is not None:
            idx = classify_convergence(traj, eq, classify_tol)
            entry["classification"] = "none" if idx is None else idx
        if traj.volumes is not None:
            try:
                rate = estimate_decay_rate(traj)
                entry["fitted_rate"] = rate
                rates.append(rate)
            except InsufficientDataError:
                entry["fitted_rate"] = None
        entries.append(entry)
    summary = {
        "count": len(entries),
        "k": k,
        "trajectories": entries,
    }
    if eq is not None:
        converged = sum(1 for e in entries if e["classification"] != "none")
        summary["converged"] = converged
        summary["classification_tol"] = classify_tol
        summary["equilibria"] = eq.points.tolist()
    if rates:
        summary["mean_fitted_rate"] = float(np.mean(rates))
    return summary


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    system = build_system(cfg)
    tol = config_tolerances(cfg)
    analysis = cfg.get("analysis", {})
    n = system.n

    if args.x0 is not None:
        x0s = _parse_x0(args.x0, n)[None, :]
        seed = None
    else:
        seed = args.seed
        rng = np.random.default_rng(seed)
        x0s = rng.uniform(-3.0, 3.0, size=(args.random, n))

    k = args.k if args.k is not None else analysis.get("k")
    cert = None
    scaling = None
    frame = None
    if k is not None:
        if not 1 <= k <= n:
            raise ParseError(f"k={k} outside [1, {n}]")
        try:
            cert = certify_from_config(system, analysis, k, tol)
            if cert.scaling is not None:
                scaling = cert.scaling
        except (ParseError, UnboundedNonlinearityError):
            cert = None  # simulation proceeds unscaled; certification is optional here
        frame = np.eye(n)[:, :k]

    trajs = integrate_ensemble(
        system, x0s, args.tend, args.dt, x0_frame=frame, q=scaling, tol=tol
    )

    eq = None
    if isinstance(system, NetworkSystem):
        try:
            eq = hopfield_symmetric_equilibria(system)
        except WrongStructureError:
            eq = None

    os.makedirs(args.outdir, exist_ok=True)
    files = []
    for i, traj in enumerate(trajs):
        path = os.path.join(args.outdir, f"traj_{i:03d}.csv")
        write_trajectory_csv(path, traj)
        files.append(path)

    summary = _simulation_summary(trajs, eq, args.classify_tol, k, files)
    report = {
        "certificate": None if cert is None else cert.to_dict(),
        "simulation": summary,
        "provenance": _provenance(tol, seed=seed, dt=args.dt, t_end=args.tend),
    }
    _emit_report(report, args.out)
    return 0


def _demo_network() -> NetworkSystem:
    n = 10
    return NetworkSystem(
        alpha=0.5,
        w=0.07 * np.ones((n, n)),
        f=Nonlinearity.scaled_tanh(1.0, n),
    )


def cmd_demo_hopfield(args) -> int:
    tol = DEFAULT_TOL
    net = _demo_network()
    print(f"Hopfield instance: n={net.n}, alpha={net.alpha}, W=0.07*ones, tanh activation")

    cert1 = check_network_k_contraction(net, 1, tol)
    cert2 = check_network_k_contraction(net, 2, tol)
    print(_certificate_line(cert1))
    print(_certificate_line(cert2))
    if cert1.passed or not cert2.passed:
        print("unexpected certification outcome", file=_sys.stderr)
        return 5

    search = find_scalar_gamma_p(net, 2, tol)
    rate = 0.5 * (search.eta1 + search.eta2)
    print(
        f"loop split: gamma={search.gamma:.6g} p={search.p:.6g} "
        f"eta1={search.eta1:.6g} eta2={search.eta2:.6g} rate={rate:.6g}"
    )

    eq = hopfield_symmetric_equilibria(net)
    magnitude = float(eq.points[1][0])
    print(
        f"equilibria: 0 and +/-{magnitude:.4f}*ones "
        f"(field residual <= {eq.residual_tol:g})"
    )

    rng = np.random.default_rng(args.seed)
    x0s = rng.uniform(-3.0, 3.0, size=(args.random, net.n))
    frame = np.eye(net.n)[:, :2]
    trajs = integrate_ensemble(
        net, x0s, args.tend, args.dt, x0_frame=frame, q=cert2.scaling, tol=tol
    )
    print(f"simulated {len(trajs)} trajectories (seed {args.seed}, "
          f"t_end={args.tend:g}, dt={args.dt:g})")

    converged = 0
    rates = []
    for traj in trajs:
        if classify_convergence(traj, eq, 1e-4) is not None:
            converged += 1
        try:
            rates.append(estimate_decay_rate(traj))
        except InsufficientDataError:
            pass
    print(f"convergence: {converged}/{len(trajs)} converged (tol 0.0001)")
    if rates:
        print(
            f"log-volume slopes: mean {np.mean(rates):.4g}, worst {max(rates):.4g}, "
            f"certified bound -{rate:.4g}"
        )

    if args.outdir:
        os.makedirs(args.outdir, exist_ok=True)
        files = []
        for i, traj in enumerate(trajs):
            path = os.path.join(args.outdir, f"traj_{i:03d}.csv")
            write_trajectory_csv(path, traj)
            files.append(path)
        summary = _simulation_summary(trajs, eq, 1e-4, 2, files)
        report = {
            "certificate": cert2.to_dict(),
            "simulation": summary,
            "provenance": _provenance(tol, seed=args.seed, dt=args.dt, t_end=args.tend),
        }
        _emit_report(report, os.path.join(args.outdir, "report.json"))
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kcontract",
        description="matrix compounds, k-contraction certificates, and trajectory simulation",
    )
    parser.add_argument("--version", action="version", version=f"kcontract {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compound", help="compute a matrix compound")
    p.add_argument("input", help="matrix file (.csv or JSON nested arrays)")
    p.add_argument("--k", type=int, required=True, help="compound order")
    p.add_argument("--mode", choices=["mult", "add"], required=True)
    p.add_argument("--out", help="write result JSON here instead of stdout")
    p.set_defaults(func=cmd_compound)

    p = sub.add_parser("certify", help="run the k-contraction sufficient conditions")
    p.add_argument("config", help="system config JSON")
    p.add_argument("--k", type=int, help="override analysis.k")
    p.add_argument("--out", help="write report JSON here instead of stdout")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("simulate", help="integrate trajectories and write CSV series")
    p.add_argument("config", help="system config JSON")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--x0", help="comma-separated initial state")
    group.add_argument("--random", type=int, metavar="N", help="N random initial states")
    p.add_argument("--seed", type=int, default=0, help="RNG seed for --random")
    p.add_argument("--k", type=int, help="track k-volumes along each run")
    p.add_argument("--tend", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--classify-tol", type=float, default=1e-4)
    p.add_argument("--outdir", default=".", help="directory for trajectory CSVs")
    p.add_argument("--out", help="write summary JSON here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("demo-hopfield", help="built-in end-to-end demonstration")
    p.add_argument("--random", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--tend", type=float, default=200.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--outdir", help="also write CSVs and a report here")
    p.set_defaults(func=cmd_demo_hopfield)

    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 3
    except UnboundedNonlinearityError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 4
    except (ShapeError, InvalidParameterError) as exc:
        # bad k, bad dt, and similar user-supplied values are config errors
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    except KContractError as exc:
        print(f"internal error: {exc}", file=_sys.stderr)
        return 5
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"internal error: {exc}", file=_sys.stderr)
        return 5


if __name__ == "__main__":
    raise SystemExit(main())
