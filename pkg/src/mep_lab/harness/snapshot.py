"""Text snapshots: key = value header, then one ``[field name]`` block per array.

Floats are written with 17 significant digits, which round-trips doubles
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..eulerian import State
from ..lagrangian import FlowState
from ..spectral import Grid

SNAPSHOT_VERSION = 1
MAGIC = "# mep-lab snapshot"


class SnapshotError(ValueError):
    pass


@dataclass
class Snapshot:
    t: float
    step: int
    grid: Grid
    kind: str  # "eulerian" | "lagrangian"
    fields: dict = field(default_factory=dict)
    version: int = SNAPSHOT_VERSION

    @classmethod
    def from_state(cls, s: State, step: int) -> "Snapshot":
        return cls(s.t, step, s.grid, "eulerian", {"n": s.n, "v": s.v})

    @classmethod
    def from_flow(cls, F: FlowState, step: int, eulerian: State | None = None) -> "Snapshot":
        f = {"p": F.p, "zeta": F.zeta, "eta": F.eta}
        if eulerian is not None:
            f["n"] = eulerian.n
            f["v"] = eulerian.v
        return cls(F.t, step, F.grid, "lagrangian", f)

    def state(self) -> State:
        return State(self.grid, self.fields["n"], self.fields["v"], self.t)

    def flow(self) -> FlowState:
        if self.kind != "lagrangian":
            raise SnapshotError("snapshot does not carry a flow map")
        return FlowState(self.grid, self.fields["p"], self.fields["zeta"], self.fields["eta"], self.t)


def write_snapshot(path: str | Path, snap: Snapshot) -> None:
    lines = [
        MAGIC,
        f"version = {snap.version}",
        f"kind = {snap.kind}",
        f"t = {snap.t!r}",
        f"step = {snap.step}",
        f"dimension = {snap.grid.dimension}",
        f"n = {snap.grid.n}",
    ]
    for name, arr in snap.fields.items():
        a = np.asarray(arr, dtype=float)
        lines.append(f"[field {name}] shape = {' '.join(map(str, a.shape))}")
        flat = a.ravel()
        for i in range(0, flat.size, 4):
            lines.append(" ".join(format(x, ".17g") for x in flat[i : i + 4]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path: str | Path, expect_grid: Grid | None = None) -> Snapshot:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SnapshotError(f"cannot read {path}: {exc.strerror}") from None
    lines = text.splitlines()
    if not lines or lines[0] != MAGIC:
        raise SnapshotError(f"{path}: not a snapshot file")
    header = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("[field"):
        if "=" not in lines[i]:
            raise SnapshotError(f"{path}:{i + 1}: malformed header line")
        k, v = (p.strip() for p in lines[i].split("=", 1))
        header[k] = v
        i += 1
    try:
        version = int(header["version"])
        if version != SNAPSHOT_VERSION:
            raise SnapshotError(f"{path}: snapshot version {version}, expected {SNAPSHOT_VERSION}")
        grid = Grid(int(header["dimension"]), int(header["n"]))
        t = float(header["t"])
        step = int(header["step"])
        kind = header["kind"]
    except KeyError as exc:
        raise SnapshotError(f"{path}: missing header key {exc.args[0]}") from None
    except ValueError as exc:
        if isinstance(exc, SnapshotError):
            raise
        raise SnapshotError(f"{path}: bad header value ({exc})") from None
    if expect_grid is not None and grid != expect_grid:
        raise SnapshotError(f"{path}: grid {grid} does not match expected {expect_grid}")
    fields_ = {}
    while i < len(lines):
        head = lines[i]
        if not head.startswith("[field ") or "] shape =" not in head:
            raise SnapshotError(f"{path}:{i + 1}: expected a field header")
        name = head[len("[field ") : head.index("]")]
        try:
            shape = tuple(int(x) for x in head.split("=", 1)[1].split())
        except ValueError:
            raise SnapshotError(f"{path}:{i + 1}: bad shape") from None
        count = int(np.prod(shape))
        i += 1
        values = []
        while i < len(lines) and not lines[i].startswith("[field"):
            try:
                values.extend(float(x) for x in lines[i].split())
            except ValueError:
                raise SnapshotError(f"{path}:{i + 1}: non-numeric field data") from None
            i += 1
        if len(values) != count:
            raise SnapshotError(f"{path}: field {name} has {len(values)} values, expected {count}")
        arr = np.array(values).reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise SnapshotError(f"{path}: field {name} contains non-finite values")
        fields_[name] = arr
    needed = {"eulerian": {"n", "v"}, "lagrangian": {"p", "zeta", "eta"}}.get(kind)
    if needed is None:
        raise SnapshotError(f"{path}: unknown snapshot kind {kind!r}")
    if not needed <= fields_.keys():
        raise SnapshotError(f"{path}: missing fields {sorted(needed - fields_.keys())}")
    snap = Snapshot(t, step, grid, kind, fields_, version)
    try:
        if kind == "eulerian" or "n" in fields_:
            snap.state()
        if kind == "lagrangian":
            snap.flow()
    except ValueError as exc:
        raise SnapshotError(f"{path}: {exc}") from None
    return snap


def snapshot_name(step: int) -> str:
    return f"snapshot_{step:08d}.txt"


def latest_snapshot(directory: str | Path) -> Path:
    snaps = sorted(Path(directory).glob("snapshot_*.txt"))
    if not snaps:
        raise SnapshotError(f"no snapshots in {directory}")
    return snaps[-1]
