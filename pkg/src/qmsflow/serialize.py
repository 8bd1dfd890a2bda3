"""JSON/CSV wire formats.

Matrices serialize as nested row-major arrays of [re, im] pairs; density
states as {"dim": n, "rho": matrix}; generator specifications as
{"dim": n, "sigma": matrix, "jumps": [{"V": matrix, "omega": w}, ...]}.
Trajectory CSV columns: t, entropy, production, exp_bound,
production_bound.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .states import DensityState
from .generators import GeneratorSpec, RateMatrix

__all__ = [
    "matrix_to_json",
    "matrix_from_json",
    "density_to_json",
    "density_from_json",
    "spec_to_json",
    "spec_from_json",
    "rate_matrix_to_json",
    "rate_matrix_from_json",
    "trajectory_to_csv",
    "trajectory_from_csv",
    "dump_json",
    "write_text_atomic",
]


def matrix_to_json(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows = [[complex(cell[0], cell[1]) for cell in row] for row in obj]
    except (TypeError, IndexError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    a = np.array(rows, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix JSON is not square: shape {a.shape}")
    return a


def density_to_json(state: DensityState) -> dict:
    return {"dim": state.dim, "rho": matrix_to_json(state.rho)}


def density_from_json(obj) -> DensityState:
    if "rho" not in obj:
        raise ValueError("density JSON must carry a 'rho' field")
    rho = matrix_from_json(obj["rho"])
    if "dim" in obj and int(obj["dim"]) != rho.shape[0]:
        raise ValueError(
            f"declared dim {obj['dim']} does not match matrix dim {rho.shape[0]}"
        )
    return DensityState.from_matrix(rho)


def spec_to_json(spec: GeneratorSpec) -> dict:
    return {
        "dim": spec.dim,
        "sigma": matrix_to_json(spec.sigma.rho),
        "jumps": [
            {"V": matrix_to_json(v), "omega": float(w)} for v, w in spec.jumps
        ],
    }


def spec_from_json(obj, validate: bool = True) -> GeneratorSpec:
    if "sigma" not in obj or "jumps" not in obj:
        raise ValueError("spec JSON must carry 'sigma' and 'jumps'")
    sigma = DensityState.from_matrix(matrix_from_json(obj["sigma"]))
    jumps = [
        (matrix_from_json(j["V"]), float(j["omega"])) for j in obj["jumps"]
    ]
    return GeneratorSpec.create(sigma, jumps, validate=validate)


def rate_matrix_to_json(rate: RateMatrix, extra: dict | None = None) -> dict:
    out = {
        "size": rate.size,
        "rates": [[float(x) for x in row] for row in rate.rates],
        "stationary": [float(x) for x in rate.stationary],
        "detailed_balance_residual": rate.detailed_balance_residual(),
        "row_sum_residual": rate.row_sum_residual(),
    }
    if extra:
        out.update(extra)
    return out


def rate_matrix_from_json(obj) -> RateMatrix:
    if "rates" not in obj or "stationary" not in obj:
        raise ValueError("rate matrix JSON must carry 'rates' and 'stationary'")
    rates = np.array(obj["rates"], dtype=float)
    stationary = np.array(obj["stationary"], dtype=float)
    if rates.ndim != 2 or rates.shape[0] != rates.shape[1]:
        raise ValueError(f"rates must be square, got shape {rates.shape}")
    if stationary.shape != (rates.shape[0],):
        raise ValueError("stationary vector length does not match the rate matrix")
    return RateMatrix(rates, stationary)


def trajectory_to_csv(rows) -> str:
    lines = ["t,entropy,production,exp_bound,production_bound"]
    for r in rows:
        eb = "" if r.entropy_bound is None else repr(r.entropy_bound)
        pb = "" if r.production_bound is None else repr(r.production_bound)
        lines.append(f"{r.t!r},{r.entropy!r},{r.production!r},{eb},{pb}")
    return "\n".join(lines) + "\n"


def trajectory_from_csv(text: str) -> list:
    from .entropy import TrajectorySample

    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != "t,entropy,production,exp_bound,production_bound":
        raise ValueError("unrecognized trajectory CSV header")
    out = []
    for ln in lines[1:]:
        t, d, p, eb, pb = ln.split(",")
        out.append(
            TrajectorySample(
                t=float(t),
                entropy=float(d),
                production=float(p),
                entropy_bound=float(eb) if eb else None,
                production_bound=float(pb) if pb else None,
            )
        )
    return out


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_text_atomic(path: str, text: str):
    """Write through a temp file and rename, so readers never see partial output."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qmsflow-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
