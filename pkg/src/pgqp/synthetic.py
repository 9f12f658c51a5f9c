"""Seeded random labeled graphs with planted copies of a template substructure."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .graph import Edge, Graph, Vertex

__all__ = ["generate_synthetic", "label_alphabet", "GeneratorError"]


class GeneratorError(ValueError):
    """Parameters that cannot produce a graph."""


def label_alphabet(spec: int | Sequence[str], prefix: str) -> list[str]:
    if isinstance(spec, int):
        if spec < 1:
            raise GeneratorError(f"need at least one {prefix} label, got {spec}")
        return [f"{prefix}{i}" for i in range(spec)]
    labels = list(spec)
    if not labels:
        raise GeneratorError(f"empty {prefix} label alphabet")
    return labels


def generate_synthetic(nv: int, ne: int, vlabels: int | Sequence[str], elabels: int | Sequence[str],
                       template: Graph | None = None, embed_count: int = 0, seed: int = 0,
                       locality: float = 0.0, window: int = 64, directed: bool = True,
                       spread: bool = False) -> Graph:
    """Random graph with ``embed_count`` vertex-disjoint template copies.

    Copies take the lowest vertex ids, in blocks of the template's size,
    keeping the template's labels and edges; with ``spread`` the planted
    vertices are instead spaced evenly over the whole id range, so a copy's
    vertices land in different neighbourhoods. The other vertices get labels
    drawn uniformly from ``vlabels``; the remaining ``ne`` minus planted
    edges join uniformly chosen distinct endpoints with labels drawn
    uniformly from ``elabels``. With probability ``locality`` an edge instead
    joins vertices at most ``window`` ids apart, which gives the graph
    structure a partitioner can exploit. Vertex ids start at 1.
    """
    vl = label_alphabet(vlabels, "v")
    el = label_alphabet(elabels, "e")
    if not 0.0 <= locality <= 1.0:
        raise GeneratorError(f"locality must be in [0, 1], got {locality}")
    if window < 1:
        raise GeneratorError(f"window must be positive, got {window}")
    if embed_count < 0:
        raise GeneratorError(f"embed_count must be non-negative, got {embed_count}")
    t_verts = sorted(template.vertices) if template is not None else []
    t_edges = template.edges if template is not None else []
    if embed_count and not t_verts:
        raise GeneratorError("embedding requested without a template")
    planted_v = embed_count * len(t_verts)
    planted_e = embed_count * len(t_edges)
    if planted_v > nv:
        raise GeneratorError(f"{embed_count} copies need {planted_v} vertices, only {nv} requested")
    if planted_e > ne:
        raise GeneratorError(f"{embed_count} copies need {planted_e} edges, only {ne} requested")
    extra = ne - planted_e
    if extra and nv < 2:
        raise GeneratorError("random edges need at least two vertices")

    rng = np.random.default_rng(seed)
    if spread and planted_v:
        slots = [1 + (i * nv) // planted_v for i in range(planted_v)]
    else:
        slots = list(range(1, planted_v + 1))
    pos = {vid: i for i, vid in enumerate(t_verts)}

    def planted(c: int, vid: int) -> int:
        return slots[c * len(t_verts) + pos[vid]]

    g = Graph()
    labels = iter(rng.integers(0, len(vl), size=nv - planted_v).tolist())
    taken = {planted(c, vid): template.vertices[vid].label for c in range(embed_count) for vid in t_verts}
    for vid in range(1, nv + 1):
        label = taken.get(vid)
        g.add_vertex(Vertex(vid, label if label is not None else vl[next(labels)]))
    for c in range(embed_count):
        for e in t_edges:
            g.add_edge(Edge(e.directed, planted(c, e.src), planted(c, e.dst), e.label))

    if extra:
        src = rng.integers(1, nv + 1, size=extra)
        dst = rng.integers(1, nv, size=extra)
        dst = np.where(dst >= src, dst + 1, dst)  # uniform over the other nv - 1 vertices
        if locality > 0:
            near = rng.random(extra) < locality
            off = rng.integers(1, window + 1, size=extra) * rng.choice([-1, 1], size=extra)
            local = src + off
            local = np.where((local < 1) | (local > nv), src - off, local)
            ok = near & (local >= 1) & (local <= nv)
            dst = np.where(ok, local, dst)
        elab = rng.integers(0, len(el), size=extra)
        for s, d, li in zip(src.tolist(), dst.tolist(), elab.tolist()):
            g.add_edge(Edge(directed, s, d, el[li]))
    return g
