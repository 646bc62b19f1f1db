"""Edge lists, layout sidecars, CSV and JSON output."""

from __future__ import annotations

import csv
import dataclasses
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .graph import Graph, LctLayout, SeparationLayout, TightnessLayout

CSV_SCHEMA_VERSION = 1


def write_edgelist(g: Graph, path):
    """``u v`` per line, lexicographic order. Isolated trailing nodes are kept via a header."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# nodes {g.n}\n")
        for u, v in g.edges().tolist():
            fh.write(f"{u} {v}\n")


def read_edgelist(path) -> Graph:
    n = None
    edges = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "nodes":
                    n = int(parts[1])
                continue
            u, v = line.split()
            edges.append((int(u), int(v)))
    if n is None:
        n = 1 + max((max(e) for e in edges), default=0)
    return Graph.from_edges(n, edges)


def to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, float) and (obj != obj or obj in (float("inf"), float("-inf"))):
        return str(obj)
    return obj


def layout_to_json(layout) -> dict:
    if isinstance(layout, LctLayout):
        return to_jsonable({"type": "lct", "k": layout.k, "root": layout.root,
                            "branch_nodes": layout.branch_nodes, "leaf_nodes": layout.leaf_nodes})
    if isinstance(layout, SeparationLayout):
        out = {"type": "separation", "l": layout.l, "c": layout.c, "m": layout.m,
               "n_big": layout.n_big, "log_n": layout.log_n, "r": layout.r,
               "r_alpha": layout.r_alpha, "r_zeta": layout.r_zeta, "roots": layout.roots,
               "L_alpha": layout.leaves_alpha, "L_zeta": layout.leaves_zeta,
               "L_i": [layout.leaves(i) for i in range(layout.m)], "C_alpha": layout.c_alpha}
        if layout.twin is not None:
            out["twin"] = layout_to_json(layout.twin)
            out["bridge"] = list(layout.bridge)
        return to_jsonable(out)
    if isinstance(layout, TightnessLayout):
        return to_jsonable({"type": "tightness", "k": layout.k, "A": layout.A, "B": layout.B,
                            "bridges": layout.bridges})
    if dataclasses.is_dataclass(layout):
        return to_jsonable(dataclasses.asdict(layout))
    return {}


def write_json(path, obj):
    Path(path).write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path, rows, columns, experiment):
    """CSV with a leading ``#`` schema comment. Rows are written as given."""
    with Path(path).open("w", newline="") as fh:
        fh.write(f"# rumorlab-csv schema={CSV_SCHEMA_VERSION} experiment={experiment}\n")
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: to_jsonable(row.get(k, "")) for k in columns})
