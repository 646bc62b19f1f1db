import json

import numpy as np

from rumorlab.graph import Graph, gen_lct, gen_separation, gen_tightness
from rumorlab.io import layout_to_json, read_edgelist, to_jsonable, write_csv, write_edgelist, write_json
from fractions import Fraction


def test_edgelist_roundtrip(tmp_path):
    g, _ = gen_lct(8)
    p = tmp_path / "g.txt"
    write_edgelist(g, p)
    h = read_edgelist(p)
    assert h.n == g.n and np.array_equal(h.edges(), g.edges())


def test_edgelist_keeps_isolated_nodes(tmp_path):
    g = Graph.from_edges(5, [(0, 1)])
    p = tmp_path / "g.txt"
    write_edgelist(g, p)
    assert read_edgelist(p).n == 5


def test_layouts_serialise():
    for g, lay in (gen_lct(4), gen_separation(8, 1, doubled=True), gen_tightness(2)):
        obj = layout_to_json(lay)
        json.dumps(obj)
        assert obj["type"] in ("lct", "separation", "tightness")
    obj = layout_to_json(gen_separation(8, 1)[1])
    assert obj["r"] == gen_separation(8, 1)[1].r and len(obj["L_i"]) == 8


def test_jsonable_and_csv(tmp_path):
    assert to_jsonable({"a": np.int64(3), "b": Fraction(1, 3), "c": float("inf")}) == {
        "a": 3, "b": "1/3", "c": "inf"}
    write_json(tmp_path / "x.json", {"v": np.arange(3)})
    assert json.loads((tmp_path / "x.json").read_text()) == {"v": [0, 1, 2]}
    write_csv(tmp_path / "x.csv", [{"a": 1, "b": 2, "zz": 9}], ["a", "b"], "demo")
    lines = (tmp_path / "x.csv").read_text().splitlines()
    assert lines == ["# rumorlab-csv schema=1 experiment=demo", "a,b", "1,2"]
