"""Command line entry point.

Each subcommand loads a model file, delegates to the library and writes a JSON
or CSV artifact (to ``--out DIR`` or standard output).  Failures print a JSON
object ``{"error": {"code", "message", "details"}}`` on standard error and exit
with status 2 (library errors) or 1 (anything else).
"""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import algebra, floquet, generators, oracle, spectral
from . import serialization as ser
from .config import parse_config
from .exceptions import CongruenceViolation, PeriodicLindbladError, ValidationError

COMMANDS = ("spectral", "rates", "generator", "evolve", "floquet", "stability", "windows", "oracle")


# ------------------------------------------------------------- report builders
def spectral_report(cfg):
    spec = cfg.spectral_data()
    out = spec.to_dict()
    out["congruence"] = spectral.congruence_check(spec, cfg.Omega).to_dict()
    return out


def rates_rows(cfg, steps=16):
    spec = cfg.spectral_data()
    bath = cfg.channel_bath()
    n = len(cfg.steering)
    rows = []
    if cfg.regime == "wcl":
        for w in spec.bohr_frequencies:
            gamma, xi = generators.wcl_rates(list(cfg.steering), bath, w, cfg.n_trunc, cfg.shifted)
            for nu in range(n):
                for mu in range(n):
                    rows.append((float(w), nu, mu, complex(gamma[nu, mu]), complex(xi[nu, mu])))
        return ["omega", "nu", "mu", "re_gamma", "im_gamma", "re_xi", "im_xi"], rows
    T = cfg.steering[0].period
    for t in np.arange(steps) * T / steps:
        for w in spec.bohr_frequencies:
            gamma, xi = generators.adiabatic_rates(list(cfg.steering), bath, w, t)
            for nu in range(n):
                for mu in range(n):
                    rows.append((float(t), float(w), nu, mu, complex(gamma[nu, mu]), complex(xi[nu, mu])))
    return ["t", "omega", "nu", "mu", "re_gamma", "im_gamma", "re_xi", "im_xi"], rows


def superoperator_rows(L):
    return [(i, j, complex(L[i, j])) for i in range(L.shape[0]) for j in range(L.shape[1])]


def trajectory_rows(cfg, t_max, steps):
    gen = cfg.generator()
    ts = np.linspace(0.0, t_max, steps + 1)
    states = floquet.propagate(gen, ts, cfg.rho0())
    d = cfg.dim
    header = ["t"] + ser.complex_header("rho", d * d)
    return header, [(t, *algebra.vectorize(r)) for t, r in zip(ts, states)]


def _decomposition(cfg):
    gen = cfg.generator()
    T = cfg.steering[0].period
    if floquet.commutativity_check(gen) <= floquet.COMMUTATIVITY_ATOL:
        return gen, floquet.normal_form_commutative(gen, T)
    return gen, floquet.normal_form_generic(gen, T)


def floquet_report(cfg, steps=32):
    gen, dec = _decomposition(cfg)
    T = dec.T
    ts = np.linspace(0.0, 3 * T, steps)
    Lam = floquet.propagate(gen, ts, method="integrate")
    recon = max(float(np.linalg.norm(L - dec.propagator(t))) for L, t in zip(Lam, ts))
    return {
        "method": dec.method,
        "T": T,
        "commutator_residual": floquet.commutativity_check(gen),
        "X": dec.X,
        "reconstruction_residual": recon,
        "periodicity_residual": dec.periodicity_residual(ts[: steps // 3 + 1]),
        "semigroup_cptp": {
            label: algebra.cptp_report(dec.exp_X(t), cfg.atol).cptp
            for label, t in (("T/4", T / 4), ("T", T), ("10T", 10 * T))
        },
    }


def stability_report(cfg):
    _, dec = _decomposition(cfg)
    return floquet.monodromy_analysis(dec.monodromy, dec.T).to_dict()


def windows_report(cfg):
    out = []
    for i, g in enumerate(cfg.steering):
        rep = floquet.markovianity_windows(g).to_dict()
        rep["coupling"] = i
        out.append(rep)
    return {"windows": out}


def oracle_rows(cfg, lambdas=None, seed=None):
    o = cfg.oracle
    lambdas = lambdas or o.get("lambdas", [0.2, 0.1, 0.05])
    seed = o.get("seed", 0) if seed is None else seed
    cm = oracle.random_compound_model(
        cfg.system_model(), cfg.steering, dE=int(o.get("dE", 16)), lam=lambdas[0], seed=seed,
        beta=float(o.get("beta", 0.5)), bandwidth=float(o.get("bandwidth", 4.0)),
        min_gap_fraction=float(o.get("min_gap_fraction", 0.5)),
    )
    model = cfg.system_model()
    pred = generators.build_wcl_generator(
        model, spectral.decompose(model), list(cfg.steering), cm.bath(float(o.get("eta", 0.1))),
        cfg.Omega, shifted=bool(o.get("shifted", True)),
    )
    study = oracle.convergence_study(cm, lambdas, float(o.get("tau_max", 10.0)), pred,
                                     n_tau=int(o.get("n_tau", 21)))
    header = ["lambda", "sup_error", "tau_max", "recurrence_bound"]
    return header, study.to_rows(), study.monotone


# ---------------------------------------------------------------- plumbing
def _emit(args, name, text):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, name), "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run(args):
    cfg = parse_config(args.model)
    overrides = {}
    if args.tol is not None:
        overrides["atol"] = args.tol
    if args.n_trunc is not None:
        overrides["n_trunc"] = args.n_trunc
    if overrides:
        cfg = replace(cfg, **overrides)

    cmd = args.command
    if cmd == "spectral":
        _emit(args, "spectral.json", ser.dumps(spectral_report(cfg)))
    elif cmd == "rates":
        header, rows = rates_rows(cfg, args.steps or 16)
        _emit(args, "rates.csv", ser.csv_text(header, rows))
    elif cmd == "generator":
        gen = cfg.generator()
        if args.out:
            _emit(args, "superoperator.csv", ser.csv_text(["row", "col", "re", "im"], superoperator_rows(gen.superoperator(0.0))))
        _emit(args, "generator.json", ser.dumps(gen.to_dict(0.0 if gen.kind == "periodic" else None)))
    elif cmd == "evolve":
        t_max = args.t_max if args.t_max is not None else 10.0
        header, rows = trajectory_rows(cfg, t_max, args.steps or 100)
        _emit(args, "trajectory.csv", ser.csv_text(header, rows))
    elif cmd == "floquet":
        _emit(args, "floquet.json", ser.dumps(floquet_report(cfg, args.steps or 32)))
    elif cmd == "stability":
        _emit(args, "stability.json", ser.dumps(stability_report(cfg)))
    elif cmd == "windows":
        _emit(args, "windows.json", ser.dumps(windows_report(cfg)))
    elif cmd == "oracle":
        lambdas = [float(x) for x in args.lambdas.split(",")] if args.lambdas else None
        header, rows, _ = oracle_rows(cfg, lambdas, args.seed)
        _emit(args, "oracle.csv", ser.csv_text(header, rows))
    return 0


def _error_payload(exc):
    details = None
    if isinstance(exc, ValidationError):
        details = [{"path": p, "message": m} for p, m in exc.errors]
    elif isinstance(exc, CongruenceViolation):
        details = [list(v) for v in exc.violations]
    code = exc.code if isinstance(exc, PeriodicLindbladError) else "internal_error"
    return {"error": {"code": code, "message": str(exc), "details": details}}


def build_parser():
    p = argparse.ArgumentParser(prog="periodic-lindblad", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--out", help="output directory (default: standard output)")
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--steps", type=int)
    p.add_argument("--tol", type=float, help="absolute tolerance override")
    p.add_argument("--lambdas", help="comma-separated coupling strengths, decreasing")
    p.add_argument("--n-trunc", type=int, dest="n_trunc")
    p.add_argument("--seed", type=int)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except PeriodicLindbladError as exc:
        sys.stderr.write(json.dumps(_error_payload(exc)) + "\n")
        return 2
    except Exception as exc:  # noqa: BLE001 - report anything else in the same format
        sys.stderr.write(json.dumps(_error_payload(exc)) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
