"""CSV/JSON serialization for the file-based pipeline.

All writers format numbers through pandas' shortest-roundtrip repr, so
repeated runs with identical inputs produce byte-identical files. Dense
matrices and vectors use a state_0..state_{J-1} header; large sparse count
tables switch to an i,j,count triplet layout with the state count recorded
on a leading comment line.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import ValidationError
from .inference import CostToGoSummary, PosteriorSample

SPARSE_DENSITY_THRESHOLD = 0.05


def _state_columns(n: int) -> list[str]:
    return [f"state_{j}" for j in range(n)]


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    """Dense row-major matrix with a state_0..state_{J-1} header."""
    M = np.asarray(matrix)
    pd.DataFrame(M, columns=_state_columns(M.shape[1])).to_csv(path, index=False)


def read_matrix_csv(path) -> np.ndarray:
    frame = pd.read_csv(path)
    return frame.to_numpy(dtype=float)


def write_vector_csv(path, vector: np.ndarray) -> None:
    """Length-J vector as a single dense CSV row."""
    v = np.asarray(vector)
    pd.DataFrame([v], columns=_state_columns(v.size)).to_csv(path, index=False)


def read_vector_csv(path) -> np.ndarray:
    frame = pd.read_csv(path)
    if len(frame) != 1:
        raise ValidationError(f"{path} should contain exactly one data row")
    return frame.to_numpy(dtype=float)[0]


def write_counts_csv(path, counts: np.ndarray) -> None:
    """Transition counts, dense or sparse-triplet depending on density."""
    y = np.asarray(counts)
    density = np.count_nonzero(y) / y.size
    if density < SPARSE_DENSITY_THRESHOLD:
        i, j = np.nonzero(y)
        body = pd.DataFrame({"i": i, "j": j, "count": y[i, j]}).to_csv(index=False)
        Path(path).write_text(f"# n_states={y.shape[0]}\n{body}")
    else:
        pd.DataFrame(y, columns=_state_columns(y.shape[1])).to_csv(path, index=False)


def read_counts_csv(path) -> np.ndarray:
    """Read either layout of a counts file back into a dense integer table."""
    with open(path) as f:
        first = f.readline().strip()
    if first.startswith("# n_states="):
        n = int(first.split("=", 1)[1])
        triplets = pd.read_csv(path, comment="#")
        y = np.zeros((n, n), dtype=np.int64)
        y[triplets["i"].to_numpy(), triplets["j"].to_numpy()] = triplets["count"].to_numpy()
        return y
    frame = pd.read_csv(path)
    if list(frame.columns) == ["i", "j", "count"]:
        n = int(max(frame["i"].max(), frame["j"].max())) + 1
        y = np.zeros((n, n), dtype=np.int64)
        y[frame["i"].to_numpy(), frame["j"].to_numpy()] = frame["count"].to_numpy()
        return y
    return frame.to_numpy(dtype=np.int64)


def write_summary_csv(path, summary: CostToGoSummary, centers: np.ndarray | None = None) -> None:
    """Cost-to-go summary: state_index, center column(s), mean, lower95, upper95."""
    J = summary.mean.size
    data: dict = {"state_index": np.arange(J)}
    if centers is not None:
        centers = np.asarray(centers)
        if centers.ndim == 1:
            data["center"] = centers
        else:
            data["center_local"] = centers[:, 0]
            data["center_target"] = centers[:, 1]
    data["mean"] = summary.mean
    data["lower95"] = summary.lower95
    data["upper95"] = summary.upper95
    pd.DataFrame(data).to_csv(path, index=False)


def read_summary_csv(path) -> CostToGoSummary:
    frame = pd.read_csv(path)
    for col in ("mean", "lower95", "upper95"):
        if col not in frame.columns:
            raise ValidationError(f"{path} is missing summary column {col!r}")
    return CostToGoSummary(
        mean=frame["mean"].to_numpy(dtype=float),
        lower95=frame["lower95"].to_numpy(dtype=float),
        upper95=frame["upper95"].to_numpy(dtype=float),
    )


def write_draws_csv(path, sample: PosteriorSample) -> None:
    """Posterior draws: one row per draw, beta_* columns then log_tau."""
    cols = {f"beta_{k}": sample.beta[:, k] for k in range(sample.beta.shape[1])}
    cols["log_tau"] = sample.log_tau
    pd.DataFrame(cols).to_csv(path, index=False)


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
