"""File formats: body JSON, measurement CSV, experiment CSV outputs.

All numbers are IEEE-754 doubles written in shortest round-trip decimal;
CSV files carry a header row and LF line endings.
"""

import csv
import json

import numpy as np

from .geometry import Cap, CapBody, Polytope


def body_to_dict(body):
    if isinstance(body, Polytope):
        return {
            "type": "polytope",
            "dim": body.dim,
            "vertices": [[float(v) for v in row] for row in body.vertices],
        }
    if isinstance(body, CapBody):
        return {
            "type": "cap_body",
            "gamma": float(body.gamma),
            "caps": [
                {
                    "axis": [float(a) for a in cap.axis],
                    "eta": float(cap.eta),
                    "truncated": bool(cap.truncated),
                }
                for cap in body.caps
            ],
        }
    raise TypeError(f"unsupported body type {type(body).__name__}")


def body_from_dict(obj):
    kind = obj.get("type")
    if kind == "polytope":
        verts = np.asarray(obj["vertices"], dtype=float)
        if verts.ndim != 2 or verts.shape[1] != int(obj["dim"]):
            raise ValueError("vertex array does not match the declared dim")
        return Polytope(verts)
    if kind == "cap_body":
        caps = tuple(
            Cap(axis=np.asarray(c["axis"], dtype=float), eta=float(c["eta"]),
                truncated=bool(c["truncated"]))
            for c in obj.get("caps", [])
        )
        return CapBody(gamma=float(obj["gamma"]), caps=caps)
    raise ValueError(f"unknown body type {kind!r}")


def save_body(body, path):
    with open(path, "w", newline="\n") as f:
        json.dump(body_to_dict(body), f, indent=2)
        f.write("\n")


def load_body(path):
    with open(path) as f:
        return body_from_dict(json.load(f))


def load_body_family(path):
    """A JSON array of body objects, for the finite-family estimator."""
    with open(path) as f:
        items = json.load(f)
    if not isinstance(items, list):
        raise ValueError("family file must hold a JSON array of bodies")
    return [body_from_dict(obj) for obj in items]


def fmt(x):
    """Shortest round-trip decimal for a double."""
    return repr(float(x))


def write_measurements_csv(path, data):
    d = data.dim
    with open(path, "w", newline="\n") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([f"u_{k + 1}" for k in range(d)] + ["y"])
        for u, y in zip(data.directions, data.values):
            writer.writerow([fmt(c) for c in u] + [fmt(y)])


def read_measurements_csv(path, sigma=0.0, gamma=1.0):
    from .estimators import MeasurementSet

    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header[-1] != "y" or not header[0].startswith("u_"):
            raise ValueError("expected header u_1,...,u_d,y")
        d = len(header) - 1
        rows = [[float(c) for c in row] for row in reader if row]
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != d + 1:
        raise ValueError("malformed measurement rows")
    return MeasurementSet(arr[:, :d], arr[:, d], sigma=sigma, gamma=gamma)


def write_risk_csv(path, estimates):
    with open(path, "w", newline="\n") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["n", "loss_kind", "mean", "stderr", "reps"])
        for r in estimates:
            writer.writerow([r.n, r.loss_kind, fmt(r.mean), fmt(r.stderr),
                             r.reps])


def write_rate_csv(path, estimates, fit):
    with open(path, "w", newline="\n") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["n", "loss_kind", "mean", "stderr", "reps"])
        for r in estimates:
            writer.writerow([r.n, r.loss_kind, fmt(r.mean), fmt(r.stderr),
                             r.reps])
        f.write(rate_summary_line(fit) + "\n")


def rate_summary_line(fit):
    target = "nan" if fit.target_exponent is None else fmt(fit.target_exponent)
    passed = "n/a" if fit.passed is None else str(fit.passed).lower()
    return (f"# slope={fmt(fit.slope)}, stderr={fmt(fit.slope_stderr)}, "
            f"target={target}, pass={passed}")


def write_assouad_csv(path, rows, fit):
    with open(path, "w", newline="\n") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["eta", "epsilon", "n", "unit_loss"])
        for eta, eps, n, loss in rows:
            writer.writerow([fmt(eta), fmt(eps), n, fmt(loss)])
        f.write(rate_summary_line(fit) + "\n")


def write_packing_json(path_or_none, pack):
    payload = {
        "dim": pack.dim,
        "epsilon": float(pack.epsilon),
        "points": [[float(c) for c in p] for p in pack.points],
    }
    text = json.dumps(payload, indent=2) + "\n"
    if path_or_none is None:
        return text
    with open(path_or_none, "w", newline="\n") as f:
        f.write(text)
    return None


def fit_result_to_dict(result):
    def clean(x):
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, (bool, np.bool_)):
            return bool(x)
        if isinstance(x, (np.floating, float)):
            return float(x)
        if isinstance(x, (np.integer, int)):
            return int(x)
        return x

    return {
        "body": body_to_dict(result.polytope),
        "fitted_values": [float(v) for v in result.fitted_values.values],
        "objective": float(result.objective),
        "diagnostics": clean(result.diagnostics),
    }
