"""Semantic error graph (SEG) data model, validation, and on-disk format.

A SEG is a prompt plus a DAG of image-bearing nodes.  Every edge adds one or
more concrete errors (its weight, >= 1) and every node is labeled with the
weighted shortest-path distance from the single head node, its error count.

One graph per JSON file:

    {"id": str, "prompt": str, "subset": "synth"|"nat"|"real",
     "nodes": [{"id": str, "error_count": int, "images": [str, ...]}, ...],
     "edges": [{"from": str, "to": str, "error_labels": [str, ...],
                "weight": int (optional)}, ...]}

Field names are exact and case-sensitive; unknown fields are ignored with a
warning.  Validation never raises on bad graph structure: violations are
data, collected into a :class:`ValidationReport`.
"""

from __future__ import annotations

import heapq
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, ValidationError

SUBSETS = ("synth", "nat", "real")

# Core error taxonomy; free-form labels are also accepted.
ERROR_LABELS = ("verbal", "composition", "missing_object", "wrong_attribute")

# Expected total images per graph; outside this range is a lint warning only.
IMAGE_COUNT_RANGE = (4, 76)


@dataclass(frozen=True)
class ErrorNode:
    """A set of images sharing the same accumulated error count."""

    id: str
    error_count: int
    images: tuple[str, ...]


@dataclass(frozen=True)
class ErrorEdge:
    """A parent->child step adding ``weight`` errors (one per label, min 1)."""

    src: str
    dst: str
    error_labels: tuple[str, ...] = ()
    weight: int = 1

    @staticmethod
    def default_weight(error_labels: tuple[str, ...]) -> int:
        return max(1, len(error_labels))


@dataclass(frozen=True)
class SemanticErrorGraph:
    id: str
    prompt: str
    subset: str
    nodes: tuple[ErrorNode, ...]
    edges: tuple[ErrorEdge, ...]

    def node_map(self) -> dict[str, ErrorNode]:
        return {n.id: n for n in self.nodes}

    def children(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            if e.src in out:
                out[e.src].append(e.dst)
        return out

    def head(self) -> ErrorNode:
        """The unique zero-count, in-degree-0 node of a valid graph."""
        indeg = {n.id: 0 for n in self.nodes}
        for e in self.edges:
            if e.dst in indeg:
                indeg[e.dst] += 1
        roots = [n for n in self.nodes if indeg[n.id] == 0]
        if len(roots) != 1:
            raise ValidationError(f"seg {self.id}: expected exactly one head node, found {len(roots)}")
        return roots[0]

    def image_ids(self) -> list[str]:
        return [img for n in self.nodes for img in n.images]


@dataclass(frozen=True)
class SegCollection:
    """An id-sorted set of validated SEGs."""

    segs: tuple[SemanticErrorGraph, ...]

    def __iter__(self):
        return iter(self.segs)

    def __len__(self) -> int:
        return len(self.segs)

    def get(self, seg_id: str) -> SemanticErrorGraph:
        for seg in self.segs:
            if seg.id == seg_id:
                return seg
        raise KeyError(seg_id)

    def filter_subset(self, subset: str | None) -> "SegCollection":
        if subset is None:
            return self
        if subset not in SUBSETS:
            raise ValueError(f"unknown subset: {subset!r}")
        return SegCollection(tuple(s for s in self.segs if s.subset == subset))


@dataclass
class ValidationReport:
    seg_id: str
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _shortest_counts(seg: SemanticErrorGraph, head_id: str) -> dict[str, int]:
    """Weighted shortest-path distance from the head to every reachable node.

    Dijkstra rather than a DAG pass so distances stay meaningful on cyclic
    input (the cycle itself is reported separately).
    """
    known = {n.id for n in seg.nodes}
    adj: dict[str, list[tuple[str, int]]] = {nid: [] for nid in known}
    for e in seg.edges:
        if e.src in known and e.dst in known:
            adj[e.src].append((e.dst, e.weight))
    dist = {head_id: 0}
    queue = [(0, head_id)]
    while queue:
        d, u = heapq.heappop(queue)
        if d > dist.get(u, d):
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist.get(v, nd + 1):
                dist[v] = nd
                heapq.heappush(queue, (nd, v))
    return dist


def _has_cycle(node_ids: set[str], edges: tuple[ErrorEdge, ...]) -> bool:
    adj: dict[str, list[str]] = {nid: [] for nid in node_ids}
    for e in edges:
        if e.src in adj and e.dst in adj:
            adj[e.src].append(e.dst)
    state: dict[str, int] = {}  # 0 in progress, 1 done

    def visit(u: str) -> bool:
        state[u] = 0
        for v in adj[u]:
            s = state.get(v)
            if s == 0:
                return True
            if s is None and visit(v):
                return True
        state[u] = 1
        return False

    return any(visit(nid) for nid in node_ids if nid not in state)


def validate_seg(seg: SemanticErrorGraph) -> ValidationReport:
    """Check every structural invariant; violations are reported, not raised."""
    rep = ValidationReport(seg_id=seg.id)
    v = rep.violations.append

    if not seg.id:
        v("empty seg id")
    if seg.subset not in SUBSETS:
        v(f"unknown subset {seg.subset!r}")
    if len(seg.nodes) < 2:
        v(f"graph has {len(seg.nodes)} node(s), at least 2 required")

    seen_nodes: set[str] = set()
    seen_images: set[str] = set()
    for n in seg.nodes:
        if not n.id:
            v("empty node id")
        if n.id in seen_nodes:
            v(f"duplicate node id {n.id!r}")
        seen_nodes.add(n.id)
        if not n.images:
            v(f"node {n.id!r} has no images")
        for img in n.images:
            if not img:
                v(f"node {n.id!r} has an empty image id")
            elif img in seen_images:
                v(f"duplicate image id {img!r}")
            seen_images.add(img)
        if n.error_count < 0:
            v(f"node {n.id!r} has negative error_count {n.error_count}")

    counts = {n.id: n.error_count for n in seg.nodes}
    for e in seg.edges:
        if e.src not in seen_nodes:
            v(f"edge references unknown node {e.src!r}")
        if e.dst not in seen_nodes:
            v(f"edge references unknown node {e.dst!r}")
        if e.src == e.dst:
            v(f"self-loop at node {e.src!r}")
        if e.weight < 1:
            v(f"edge {e.src}->{e.dst} has non-positive weight {e.weight}")
        expected_w = ErrorEdge.default_weight(e.error_labels)
        if e.weight != expected_w:
            v(
                f"edge {e.src}->{e.dst} weight {e.weight} disagrees with its "
                f"{len(e.error_labels)} error label(s) (expected {expected_w})"
            )
        if e.src in counts and e.dst in counts and counts[e.dst] <= counts[e.src]:
            v(f"error_count not increasing along edge {e.src}->{e.dst}")

    indeg = {nid: 0 for nid in seen_nodes}
    for e in seg.edges:
        if e.dst in indeg:
            indeg[e.dst] += 1
    roots = [n for n in seg.nodes if indeg.get(n.id, 0) == 0]
    head = None
    if not roots:
        v("no head node (every node has an incoming edge)")
    elif len(roots) > 1:
        v("multiple head nodes: " + ", ".join(sorted(n.id for n in roots)))
    else:
        head = roots[0]
        if head.error_count != 0:
            v(f"head node {head.id!r} has error_count {head.error_count}, expected 0")

    if _has_cycle(seen_nodes, seg.edges):
        v("graph contains a directed cycle")

    if head is not None:
        dist = _shortest_counts(seg, head.id)
        for n in seg.nodes:
            if n.id == head.id:
                continue
            if n.id not in dist:
                v(f"node {n.id!r} not reachable from head {head.id!r}")
            elif n.error_count != dist[n.id]:
                v(f"error_count mismatch at node {n.id}: expected {dist[n.id]}")

    total_images = len(seg.image_ids())
    lo, hi = IMAGE_COUNT_RANGE
    if not lo <= total_images <= hi:
        rep.warnings.append(
            f"total image count {total_images} outside expected range [{lo}, {hi}]"
        )
    return rep


# ---------------------------------------------------------------------------
# parsing / serialization


def _require(obj: dict, key: str, kind, where: str, source: str):
    if key not in obj:
        raise ParseError(f"{where}: missing field {key!r}", source=source)
    val = obj[key]
    if kind is int and isinstance(val, bool):
        raise ParseError(f"{where}: field {key!r} must be an integer", source=source)
    if not isinstance(val, kind):
        raise ParseError(
            f"{where}: field {key!r} has type {type(val).__name__}, expected {kind.__name__}",
            source=source,
        )
    return val


def _warn_unknown(obj: dict, known: set[str], where: str, source: str) -> None:
    for key in obj:
        if key not in known:
            warnings.warn(f"{source}: {where}: ignoring unknown field {key!r}", stacklevel=3)


def _str_list(val, where: str, key: str, source: str) -> tuple[str, ...]:
    if not isinstance(val, list) or not all(isinstance(x, str) for x in val):
        raise ParseError(f"{where}: field {key!r} must be a list of strings", source=source)
    return tuple(val)


def parse_seg(data: dict, source: str = "<data>") -> SemanticErrorGraph:
    """Build a SEG from a decoded JSON object; strict about schema, not structure."""
    if not isinstance(data, dict):
        raise ParseError("top-level value must be an object", source=source)
    _warn_unknown(data, {"id", "prompt", "subset", "nodes", "edges"}, "seg", source)
    seg_id = _require(data, "id", str, "seg", source)
    prompt = _require(data, "prompt", str, "seg", source)
    subset = _require(data, "subset", str, "seg", source)
    if subset not in SUBSETS:
        raise ParseError(
            f"seg: field 'subset' must be one of {'/'.join(SUBSETS)}, got {subset!r}",
            source=source,
        )
    raw_nodes = _require(data, "nodes", list, "seg", source)
    raw_edges = _require(data, "edges", list, "seg", source)

    nodes = []
    for i, nd in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        if not isinstance(nd, dict):
            raise ParseError(f"{where}: must be an object", source=source)
        _warn_unknown(nd, {"id", "error_count", "images"}, where, source)
        nodes.append(
            ErrorNode(
                id=_require(nd, "id", str, where, source),
                error_count=_require(nd, "error_count", int, where, source),
                images=_str_list(_require(nd, "images", list, where, source), where, "images", source),
            )
        )

    edges = []
    for i, ed in enumerate(raw_edges):
        where = f"edges[{i}]"
        if not isinstance(ed, dict):
            raise ParseError(f"{where}: must be an object", source=source)
        _warn_unknown(ed, {"from", "to", "error_labels", "weight"}, where, source)
        labels = _str_list(
            _require(ed, "error_labels", list, where, source), where, "error_labels", source
        )
        if "weight" in ed:
            weight = _require(ed, "weight", int, where, source)
        else:
            weight = ErrorEdge.default_weight(labels)
        edges.append(
            ErrorEdge(
                src=_require(ed, "from", str, where, source),
                dst=_require(ed, "to", str, where, source),
                error_labels=labels,
                weight=weight,
            )
        )

    return SemanticErrorGraph(
        id=seg_id, prompt=prompt, subset=subset, nodes=tuple(nodes), edges=tuple(edges)
    )


def seg_to_dict(seg: SemanticErrorGraph) -> dict:
    return {
        "id": seg.id,
        "prompt": seg.prompt,
        "subset": seg.subset,
        "nodes": [
            {"id": n.id, "error_count": n.error_count, "images": list(n.images)}
            for n in seg.nodes
        ],
        "edges": [
            {"from": e.src, "to": e.dst, "error_labels": list(e.error_labels), "weight": e.weight}
            for e in seg.edges
        ],
    }


def load_seg_file(path: str | Path) -> SemanticErrorGraph:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", source=str(path)) from exc
    return parse_seg(data, source=str(path))


def write_seg_file(seg: SemanticErrorGraph, path: str | Path) -> None:
    path = Path(path)
    path.write_text(json.dumps(seg_to_dict(seg), indent=2) + "\n", encoding="utf-8")


def seg_paths(path: str | Path) -> list[Path]:
    """SEG files under ``path``: the file itself, or dir/*.json sorted."""
    path = Path(path)
    if path.is_file():
        return [path]
    if path.is_dir():
        return sorted(path.glob("*.json"))
    raise FileNotFoundError(f"{path}: path does not exist")


def load_segs(path: str | Path) -> SegCollection:
    """Load and validate every SEG under ``path``; sorted by id.

    Raises ParseError on malformed files, ValidationError when any graph
    violates an invariant or two files share an id.  Lint warnings from
    validation are emitted via :mod:`warnings`.
    """
    files = seg_paths(path)
    if not files:
        raise ParseError("no SEG files found", source=str(path))
    segs: list[SemanticErrorGraph] = []
    by_id: dict[str, str] = {}
    violations: list[str] = []
    for f in files:
        seg = load_seg_file(f)
        if seg.id in by_id:
            raise ValidationError(
                f"duplicate seg id {seg.id!r} in {f} (already defined in {by_id[seg.id]})"
            )
        by_id[seg.id] = str(f)
        rep = validate_seg(seg)
        for w in rep.warnings:
            warnings.warn(f"{f}: seg {seg.id}: {w}", stacklevel=2)
        if not rep.ok:
            violations.extend(f"{f}: seg {seg.id}: {msg}" for msg in rep.violations)
        segs.append(seg)
    if violations:
        raise ValidationError(
            f"{len(violations)} validation violation(s)", violations=violations
        )
    segs.sort(key=lambda s: s.id)
    return SegCollection(tuple(segs))
