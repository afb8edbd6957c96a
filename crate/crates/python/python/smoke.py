"""Smoke test for the andre_py extension module."""

import json
import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import andre_py as a

assert a.Problem.names() == ["ivp1", "ivp2", "ivp3", "ivp4", "example10"]
p = a.Problem("ivp3", t_end=0.5)
assert p.domain == (0.0, 0.5)
assert p.initial == [math.pi / 4]
assert abs(p.exact(0.0)[0] - math.pi / 4) < 1e-15
assert a.incremental_schedule(10, 5) == [2, 4, 6, 8, 10]

net = a.Network(5)
assert len(net.weights()) == 16
assert net.forward(0.3) == 0.0

m = a.Model([-1.0], 0.0, 0.5)
assert m.trial_value(0.0) == [-1.0]
ex = a.Problem("example10")
points = [0.0, 0.25, 0.5]
assert len(m.cost_gradient(ex, points)) == m.weight_count
e_tp = m.train(ex, epochs=2000)
assert e_tp < m.cost(ex, points) + 1.0

cfg = a.Config(p, epochs=2000)
assert cfg.sigma == 1.0 and cfg.increments == 2
report = a.solve(p, cfg)
assert report.completed, report.status
assert report.boundaries[0] == 0.0 and report.boundaries[-1] == 0.5
assert report.linf >= report.l1
assert report.evaluate(0.0) == [math.pi / 4]

with tempfile.TemporaryDirectory() as d:
    files = report.export(d)
    summary = json.load(open(os.path.join(d, "summary.json")))
    assert summary["schema"] == 1 and summary["status"] == "completed"
    again = a.Report.load(os.path.join(d, "summary.json"))
    assert again.l1 == report.l1

rows = a.sweep(a.Problem("ivp1", t_end=0.5), "sigma", [1e-2, 1e-3], a.Config(epochs=1000, sigma=1e-2), threads=2)
assert [r["value"] for r in rows] == [1e-2, 1e-3]

try:
    a.Problem("nope")
except ValueError as e:
    assert "ivp1" in str(e)
else:
    raise AssertionError("unknown problem accepted")

print(f"ok: h={report.h} l1={report.l1:.3e} sweep h={[r['h'] for r in rows]}")
