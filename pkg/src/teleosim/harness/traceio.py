"""CSV trace export and loading; byte-reproducible for a given run."""

from __future__ import annotations

import numpy as np

from .engine import ScenarioTrace

_VECTOR_COLUMNS = ("x_l", "xd_l", "x", "tau", "l1", "l2", "u_l", "u", "f_env")
_AXES = ("x", "y", "z")

HEADER = ["t"] + [f"{col}_{ax}" for col in _VECTOR_COLUMNS for ax in _AXES] + ["error"]


def export_trace(trace: ScenarioTrace, path: str) -> None:
    """Write one row per tick; floats printed with shortest round-trip repr."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(HEADER) + "\n")
            for i in range(len(trace)):
                cells = [repr(float(trace.t[i]))]
                for col in _VECTOR_COLUMNS:
                    cells.extend(repr(float(v)) for v in getattr(trace, col)[i])
                cells.append(repr(float(trace.error[i])))
                fh.write(",".join(cells) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def load_trace(path: str) -> ScenarioTrace:
    try:
        data = np.genfromtxt(path, delimiter=",", names=True)
    except OSError as exc:
        raise OSError(f"cannot read trace from {path}: {exc}") from exc
    if data.dtype.names is None or list(data.dtype.names) != [h.replace("-", "") for h in HEADER]:
        raise ValueError(f"{path}: unexpected trace header")
    data = np.atleast_1d(data)

    def vec(col):
        return np.column_stack([data[f"{col}_{ax}"] for ax in _AXES])

    return ScenarioTrace(
        t=np.asarray(data["t"], dtype=float),
        x_l=vec("x_l"), xd_l=vec("xd_l"), x=vec("x"), tau=vec("tau"),
        l1=vec("l1"), l2=vec("l2"), u_l=vec("u_l"), u=vec("u"), f_env=vec("f_env"),
        error=np.asarray(data["error"], dtype=float),
    )
