"""Reading and writing fields, spectra and certificates.

A ``ScalarField`` is stored as ``<stem>.csv`` (coordinates then value, one
node per row) next to ``<stem>.json`` holding N, h, the boundary mode and
the shape spec. Floats are written with 17 significant digits so a round
trip is exact.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .grid import ScalarField, ShapeSpec, build_domain
from .hardy import BoundCertificate, HardyCheck
from .lane_emden import LaneEmdenDensity, lane_emden_energy
from .spectral import SpectralResult

FMT = "%.17g"


def _stem(path) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".csv", ".json") else path


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_field(path, u: ScalarField, extra: Optional[dict] = None) -> tuple[Path, Path]:
    """Write ``u`` as CSV plus JSON sidecar; returns both paths."""
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    dom = u.domain
    names = [f"x{i + 1}" for i in range(dom.N)] + ["value"]
    table = np.column_stack([dom.coords, u.values])
    np.savetxt(stem.with_suffix(".csv"), table, fmt=FMT, delimiter=",",
               header=",".join(names), comments="")
    meta = {"N": dom.N, "h": dom.h, "boundary": dom.boundary, "M": dom.M,
            "shape": dom.shape.to_dict()}
    if extra:
        meta.update(extra)
    write_json(stem.with_suffix(".json"), meta)
    return stem.with_suffix(".csv"), stem.with_suffix(".json")


def read_field(path) -> tuple[ScalarField, dict]:
    """Rebuild the grid from the sidecar and load the values; returns (field, sidecar)."""
    stem = _stem(path)
    meta = json.loads(stem.with_suffix(".json").read_text())
    dom = build_domain(ShapeSpec.from_dict(meta["shape"]), meta["h"], meta.get("boundary", "linear"))
    table = np.loadtxt(stem.with_suffix(".csv"), delimiter=",", skiprows=1, ndmin=2)
    lattice = np.rint(table[:, :-1] / dom.h).astype(np.int64)
    idx = dom.index_of(lattice)
    if len(table) != dom.M or np.any(idx < 0):
        raise ValueError(f"{stem}.csv does not match the grid in its sidecar")
    values = np.empty(dom.M)
    values[idx] = table[:, -1]
    return ScalarField(dom, values), meta


def write_density(path, d: LaneEmdenDensity):
    return write_field(path, d.field, {"q": d.q, "residual": d.residual,
                                       "iterations": d.iterations, "energy": d.energy,
                                       "tol": d.tol})


def read_density(path) -> LaneEmdenDensity:
    u, meta = read_field(path)
    return LaneEmdenDensity(meta["q"], u, meta["residual"], meta["iterations"],
                            meta.get("energy", lane_emden_energy(u, meta["q"])),
                            meta.get("tol", 1e-8))


def write_spectral(path, r: SpectralResult):
    stem = _stem(path)
    write_json(stem.with_suffix(".json"), r.to_dict())
    return write_field(stem.parent / (stem.name + "_eigenfunction"), r.eigenfunction,
                       {"eigenvalue": r.eigenvalue})


def write_sweep_csv(path, checks: Iterable[HardyCheck]) -> Path:
    """One row per Hardy check, sorted by (delta, test id)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = sorted(checks, key=lambda c: (c.delta, c.test_id))
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["delta", "test_id", "lhs", "rhs", "margin", "passed"])
        for c in rows:
            out.writerow([FMT % c.delta, c.test_id, FMT % c.lhs, FMT % c.rhs,
                          FMT % c.margin, int(c.passed)])
    return path


def certificate_summary(cert: BoundCertificate) -> str:
    def num(x):
        return "n/a" if x is None else f"{x:.6g}"

    worst = min((c.margin / c.rhs for c in cert.hardy_checks if c.rhs > 0), default=None)
    lines = [
        f"verdict            {cert.verdict}",
        f"shape              {cert.shape['kind']} (N={cert.N}), h={cert.h:g}, q={cert.q:g}",
        f"sup norm of w      {num(cert.sup_norm)}",
        f"lambda_1           {num(cert.lambda1)}",
        f"lambda_1(V)        {num(cert.lambda1_V)}",
        f"theorem bound      {num(cert.theorem_bound)}  (slack {cert.slack:g})",
        f"corollary bound    {num(cert.corollary_bound)}  (C = {num(cert.moser_constant)})",
        f"admissibility      {num(cert.admissibility)}",
        f"hardy checks       {sum(c.passed for c in cert.hardy_checks)}/{len(cert.hardy_checks)} pass,"
        f" worst relative margin {num(worst)}",
    ]
    lines += [f"error              {e}" for e in cert.errors]
    return "\n".join(lines) + "\n"


def write_certificate(out_dir, cert: BoundCertificate) -> dict:
    """Certificate JSON, text summary and sweep CSV under ``out_dir``."""
    out_dir = Path(out_dir)
    paths = {
        "certificate": write_json(out_dir / "certificate.json", cert.to_dict()),
        "sweep": write_sweep_csv(out_dir / "hardy_sweep.csv", cert.hardy_checks),
    }
    summary = out_dir / "summary.txt"
    summary.write_text(certificate_summary(cert))
    paths["summary"] = summary
    return paths
