"""Command line interface.

Subcommands: simulate, fit, risk, rate, assouad, pack.  Option precedence
is flags over a key=value config file over built-in defaults.  Exit codes:
0 on success/pass, 2 when a rate gate fails, 1 on errors.
"""

import argparse
import json
import sys

import numpy as np

from . import assouad as lb
from . import bodyio, harness
from .estimators import QPSettings, SieveConfig, fit_ls_2d, fit_ls_full, \
    fit_ls_net, fit_sieve_polytope
from .spheres import maximal_packing


def _read_config(path):
    conf = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line (need key=value): {line!r}")
            key, value = line.split("=", 1)
            conf[key.strip().replace("-", "_")] = value.strip()
    return conf


def _merge(args, defaults):
    """Resolve each option: flag if given, else config file, else default."""
    conf = _read_config(args.config) if getattr(args, "config", None) else {}
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
        elif key in conf:
            raw = conf[key]
            caster = type(default) if default is not None else str
            if caster is bool:
                out[key] = raw.lower() in ("1", "true", "yes")
            else:
                out[key] = caster(raw)
        else:
            out[key] = default
    return out


def _truth_body(opts):
    name_or_path = opts["truth"]
    try:
        return bodyio.load_body(name_or_path)
    except (FileNotFoundError, IsADirectoryError):
        return harness.named_truth(name_or_path, opts["dim"], opts["gamma"])


def cmd_simulate(args):
    opts = _merge(args, dict(truth="square", dim=2, design="even2d", n=100,
                             sigma=0.1, gamma=1.0, epsilon=None, seed=0,
                             out="measurements.csv"))
    body = _truth_body(opts)
    data = harness.generate_data(body, opts["design"], opts["n"],
                                 opts["sigma"], opts["gamma"], opts["seed"],
                                 epsilon=opts["epsilon"])
    bodyio.write_measurements_csv(opts["out"], data)
    print(f"wrote {data.n} measurements to {opts['out']}")
    return 0


def cmd_fit(args):
    opts = _merge(args, dict(input="measurements.csv", estimator="sieve",
                             m=None, gamma=1.0, sigma=0.0, restarts=20,
                             seed=0, family=None, out="fit.json"))
    data = bodyio.read_measurements_csv(opts["input"], sigma=opts["sigma"],
                                        gamma=opts["gamma"])
    estimator = opts["estimator"]
    if estimator == "full":
        result = fit_ls_full(data, QPSettings())
    elif estimator == "qp2d":
        result = fit_ls_2d(data, QPSettings())
    elif estimator == "sieve":
        from .estimators import choose_m

        m = opts["m"] or choose_m(data.n, data.dim, max(opts["sigma"], 1e-12),
                                  opts["gamma"])
        rng = np.random.default_rng(opts["seed"])
        result = fit_sieve_polytope(
            data, SieveConfig(m=m, restarts=opts["restarts"]), rng
        )
    elif estimator == "net":
        if not opts["family"]:
            raise ValueError("--family is required for the net estimator")
        result = fit_ls_net(data, bodyio.load_body_family(opts["family"]))
    else:
        raise ValueError(f"unknown estimator {estimator!r}")

    with open(opts["out"], "w", newline="\n") as f:
        json.dump(bodyio.fit_result_to_dict(result), f, indent=2)
        f.write("\n")
    print(f"estimator={estimator} objective={result.objective!r} "
          f"-> {opts['out']}")
    return 0


def _experiment_spec(opts):
    body = _truth_body(opts)
    n_grid = tuple(int(t) for t in str(opts["n_grid"]).split(",") if t)
    options = {}
    if opts["estimator"] == "sieve":
        if opts["m"]:
            options["m"] = opts["m"]
        options["restarts"] = opts["restarts"]
    return harness.ExperimentSpec(
        dim=opts["dim"],
        truth=body,
        sigma=opts["sigma"],
        gamma=opts["gamma"],
        n_grid=n_grid,
        reps=opts["reps"],
        estimator=opts["estimator"],
        estimator_options=options,
        design=opts["design"],
        setting=opts["setting"],
        epsilon=opts["epsilon"],
        master_seed=opts["seed"],
        workers=opts["workers"],
    )


_RISK_DEFAULTS = dict(truth="square", dim=2, design="even2d", setting="fixed",
                      estimator="sieve", m=None, restarts=20, sigma=0.1,
                      gamma=1.0, n_grid="64,128,256,512,1024,2048,4096",
                      reps=100, epsilon=None, seed=0, workers=1,
                      out="risk.csv")


def cmd_risk(args):
    opts = _merge(args, _RISK_DEFAULTS)
    spec = _experiment_spec(opts)
    estimates = harness.risk_curve(spec)
    bodyio.write_risk_csv(opts["out"], estimates)
    for r in estimates:
        print(f"n={r.n} loss={r.loss_kind} mean={r.mean!r} stderr={r.stderr!r}")
    print(f"wrote {opts['out']}")
    return 0


def cmd_rate(args):
    defaults = dict(_RISK_DEFAULTS, out="rate.csv", target=None, tol=0.15)
    opts = _merge(args, defaults)
    spec = _experiment_spec(opts)
    target = opts["target"]
    if target is None:
        target = harness.rate_exponent(opts["dim"])
    estimates = harness.risk_curve(spec)
    fit = harness.fit_rate([(r.n, r.mean) for r in estimates],
                           target_exponent=target, tolerance=opts["tol"])
    bodyio.write_rate_csv(opts["out"], estimates, fit)
    print(f"slope={fit.slope!r}, target={target!r}, "
          f"pass={str(fit.passed).lower()}")
    return 0 if fit.passed else 2


def cmd_assouad(args):
    opts = _merge(args, dict(dim=2, gamma=1.0,
                             eta_grid="0.125,0.0625,0.03125,0.015625",
                             seed=0, tol=None, out="assouad.csv"))
    etas = [float(t) for t in str(opts["eta_grid"]).split(",") if t]
    fit, rows = lb.cap_loss_scaling(opts["dim"], opts["gamma"], etas,
                                    seed=opts["seed"])
    tol = opts["tol"]
    if tol is not None:
        fit = harness.RateFit(
            slope=fit.slope, slope_stderr=fit.slope_stderr,
            intercept=fit.intercept, n_points=fit.n_points,
            target_exponent=fit.target_exponent, tolerance=tol,
        )
    bodyio.write_assouad_csv(opts["out"], rows, fit)
    print(bodyio.rate_summary_line(fit).lstrip("# "))
    if fit.passed is False:
        return 2
    return 0


def cmd_pack(args):
    opts = _merge(args, dict(dim=2, epsilon=0.1, seed=0, saturation=None,
                             out=None))
    rng = np.random.default_rng(opts["seed"])
    pack = maximal_packing(rng, opts["dim"], opts["epsilon"],
                           saturation=opts["saturation"])
    text = bodyio.write_packing_json(opts["out"], pack)
    if text is not None:
        sys.stdout.write(text)
    else:
        print(f"wrote {len(pack)} directions to {opts['out']}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="convexfit",
        description="Convex body estimation from support-function data",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, flags):
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None)
        for flag, kind in flags.items():
            sp.add_argument(f"--{flag.replace('_', '-')}", dest=flag,
                            type=kind, default=None)
        sp.set_defaults(fn=fn)
        return sp

    add("simulate", cmd_simulate,
        dict(truth=str, dim=int, design=str, n=int, sigma=float, gamma=float,
             epsilon=float, seed=int, out=str))
    add("fit", cmd_fit,
        dict(input=str, estimator=str, m=int, gamma=float, sigma=float,
             restarts=int, seed=int, family=str, out=str))
    add("risk", cmd_risk,
        dict(truth=str, dim=int, design=str, setting=str, estimator=str,
             m=int, restarts=int, sigma=float, gamma=float, n_grid=str,
             reps=int, epsilon=float, seed=int, workers=int, out=str))
    add("rate", cmd_rate,
        dict(truth=str, dim=int, design=str, setting=str, estimator=str,
             m=int, restarts=int, sigma=float, gamma=float, n_grid=str,
             reps=int, epsilon=float, seed=int, workers=int, out=str,
             target=float, tol=float))
    add("assouad", cmd_assouad,
        dict(dim=int, gamma=float, eta_grid=str, seed=int, tol=float, out=str))
    add("pack", cmd_pack,
        dict(dim=int, epsilon=float, seed=int, saturation=int, out=str))
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # CLI contract: errors exit with code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
