"""Per-sample diagnostics and the diagnostics.csv writer."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .. import hamiltonian
from ..eulerian import State
from ..gevrey import analyticity_radius

HEADER = ["t", "H1", "H2", "mass", "momentum", "sobolev_v", "sobolev_n", "sigma_n", "sigma_v", "event"]


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    H1: float
    H2: float
    mass: float
    momentum: float
    sobolev_v: float
    sobolev_n: float
    sigma_n: float
    sigma_v: float
    event: str = ""


def functionals(s: State) -> dict[str, float]:
    """H1, H2, mass, momentum. In 2-D, H2 and momentum are summed over components."""
    if s.grid.dimension == 1:
        return {tag: hamiltonian.eval_functional(tag, s) for tag in hamiltonian.FUNCTIONALS}
    g = s.grid
    ln = g.inv_helmholtz(s.n)
    grad_ln = g.grad(ln)
    h1 = 0.5 * g.integrate(np.sum(s.v**2, axis=0) * s.n + np.sum(grad_ln**2, axis=0) + ln**2)
    return {
        "H1": h1,
        "H2": float(sum(g.integrate(s.n * s.v[i]) for i in range(g.dimension))),
        "mass": g.integrate(s.n),
        "momentum": float(sum(g.integrate(s.v[i]) for i in range(g.dimension))),
    }


def record_for(s: State, sigma: int = 2, event: str = "") -> DiagnosticsRecord:
    if not (np.all(np.isfinite(s.n)) and np.all(np.isfinite(s.v))):
        nan = math.nan
        return DiagnosticsRecord(s.t, nan, nan, nan, nan, nan, nan, nan, nan, event)
    f = functionals(s)
    g = s.grid
    return DiagnosticsRecord(
        t=s.t,
        H1=f["H1"],
        H2=f["H2"],
        mass=f["mass"],
        momentum=f["momentum"],
        sobolev_v=g.sobolev_norm(s.v, sigma),
        sobolev_n=g.sobolev_norm(s.n, sigma - 1),
        sigma_n=analyticity_radius(g, s.n).sigma_fit,
        sigma_v=analyticity_radius(g, s.v).sigma_fit,
        event=event,
    )


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


class DiagnosticsWriter:
    """Append-only CSV with the fixed header."""

    def __init__(self, path: str | Path, append: bool = False):
        self.path = Path(path)
        exists = append and self.path.exists()
        self._fh = open(self.path, "a" if exists else "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        if not exists:
            self._w.writerow(HEADER)

    def write(self, rec: DiagnosticsRecord) -> None:
        self._w.writerow([_fmt(v) for v in astuple(rec)])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_diagnostics(path: str | Path) -> list[DiagnosticsRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != HEADER:
            raise ValueError(f"unexpected diagnostics header {header}")
        out = []
        for row in reader:
            vals = [float(x) for x in row[:-1]]
            out.append(DiagnosticsRecord(*vals, event=row[-1]))
    return out


def truncate_before(path: str | Path, t: float) -> None:
    """Keep the event-free rows with time strictly before t (used when resuming from time t)."""
    recs = [r for r in read_diagnostics(path) if r.t < t - 1e-12 * max(1.0, abs(t)) and not r.event]
    with DiagnosticsWriter(path) as w:
        for r in recs:
            w.write(r)


assert [f.name for f in fields(DiagnosticsRecord)] == HEADER
