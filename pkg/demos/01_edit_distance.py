"""Exact and approximate graph edit distance on a few small graphs.

Run: python3 demos/01_edit_distance.py
"""
import time

from graphsim import Graph
from graphsim.assignment import assignment_ged
from graphsim.dataset import generate_synthetic
from graphsim.ged import astar_ged, beam_ged, ged_to_similarity

# Two hand-built molecules-like graphs: a labeled triangle and a labeled path.
triangle = Graph.build("triangle", ["C", "C", "O"], [(0, 1), (1, 2), (0, 2)])
path = Graph.build("path", ["C", "N", "O"], [(0, 1), (1, 2)])

# One relabel (C->N) and one edge deletion turn the triangle into the path.
ged = astar_ged(triangle, path)
print(f"exact GED(triangle, path) = {ged}")
print(f"similarity exp(-nGED)    = {ged_to_similarity(ged, triangle.n, path.n):.4f}")

# On random graphs the approximations are upper bounds; the wider the beam,
# the closer to exact, and an unbounded beam is exact.
corpus = generate_synthetic(12, 9, 3, seed=1)
pairs = list(zip(corpus.graphs[0::2], corpus.graphs[1::2]))
methods = {
    "hungarian": lambda a, b: assignment_ged(a, b, "hungarian"),
    "beam(1)": lambda a, b: beam_ged(a, b, 1),
    "beam(3)": lambda a, b: beam_ged(a, b, 3),
    "beam(inf)": lambda a, b: beam_ged(a, b, None),
    "astar": astar_ged,
}
print(f"\n{'pair':>10} " + " ".join(f"{m:>10}" for m in methods))
totals = dict.fromkeys(methods, 0.0)
for a, b in pairs:
    row = []
    for name, fn in methods.items():
        start = time.perf_counter()
        row.append(fn(a, b))
        totals[name] += time.perf_counter() - start
    print(f"{a.id + '/' + b.id:>10} " + " ".join(f"{v:>10}" for v in row))
print(f"{'ms/pair':>10} " + " ".join(f"{1e3 * t / len(pairs):>10.1f}" for t in totals.values()))
