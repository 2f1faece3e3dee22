"""Anchor placement in verifiable trilateration groups.

Anchors go down in groups of three built around a known center, called
the group's trilateration point.  The first three anchors are placed
randomly and a fourth is installed directly on their trilateration
point, so that point hosts a physical radio.  Every later triple is
placed around an already deployed node: that node's position becomes
the new group's trilateration point, again guaranteeing a radio at the
center.  Placement keeps repeating until the target count is reached;
one or two leftover anchors are attached to their nearest group.

At the end of placement the network records two reference tables that
detection later replays:

* ``m1``: per group, the position recovered by trilaterating the
  group's founding triple against its center distances.
* ``m_cross``: per (anchor, neighbor group), the anchor's position as
  recovered through that neighbor group's founding triple.

Both tables are computed from positions as advertised at deployment
time, before any node has a chance to lie.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable

import numpy as np

from .geometry import DegenerateGeometry, Point2, trilaterate
from .ranging import true_distance

# Group construction limits.  Triples are sampled in an annulus around
# their center; candidates with weak geometry are rejected and redrawn.
GROUP_RADIUS_MIN = 20.0
GROUP_RADIUS_MAX = 60.0
MIN_MEMBER_SPACING = 10.0
MIN_GROUP_AREA = 100.0
MAX_GROUP_ATTEMPTS = 10_000

# New anchors must keep clear of every radio already on the ground.
# Crowded seeds fail their candidates quickly, which steers growth
# toward open space and spreads the network over the area.
MIN_NODE_SEPARATION = 15.0

# Seed selection samples a few hosts and grows from the least crowded
# one, measured by existing group centers within this radius.  Pure
# uniform selection random-walks into a clump; favoring the frontier
# covers the area the way a field deployment crew would.
SEED_CANDIDATES = 5
CROWDING_RADIUS = 80.0

# Frontier bias alone can deadlock: a node pinned against the area
# boundary may be the unique least-crowded candidate, so every attempt
# re-picks it even though no triple fits around it.  Past this share of
# the budget, seed choice falls back to uniform over eligible hosts.
FRONTIER_ATTEMPTS = 2_000

DEFAULT_COMM_RADIUS = 150.0

# First-triple spread.  Slightly wider than the group annulus so the
# seed network does not start out degenerate.
FIRST_SPACING_MIN = 30.0
FIRST_SPACING_MAX = 70.0


class DeploymentFailure(RuntimeError):
    """Raised when placement cannot satisfy its constraints."""


class UnknownGroup(LookupError):
    """Raised when a group id is not present in the network."""


@dataclass(frozen=True)
class AnchorNode:
    """One anchor radio.

    ``true_pos`` is where the node physically sits and never changes.
    ``reported_pos`` is the location reference the node advertises; it
    equals ``true_pos`` until the node is compromised.
    """

    id: int
    true_pos: Point2
    reported_pos: Point2
    group_id: int
    compromised: bool = False


@dataclass(frozen=True)
class AnchorGroup:
    """A deployment group of three or more anchors.

    ``member_ids`` keeps insertion order: the first three entries are
    the founding triple that the group was built from, later entries
    are attached nodes.  ``trilateration_point`` is the center the
    triple was constructed around; a physical node sits there.
    """

    id: int
    member_ids: tuple[int, ...]
    trilateration_point: Point2
    active: bool = True

    @property
    def founding_ids(self) -> tuple[int, int, int]:
        return self.member_ids[0], self.member_ids[1], self.member_ids[2]


@dataclass(frozen=True)
class ReferenceTable:
    """Deployment-time localization records held by the central server."""

    m1: dict[int, Point2] = field(default_factory=dict)
    m_cross: dict[tuple[int, int], Point2] = field(default_factory=dict)


@dataclass(frozen=True)
class Network:
    """An immutable deployed network snapshot."""

    area: tuple[float, float]
    comm_radius: float
    nodes: tuple[AnchorNode, ...]
    groups: tuple[AnchorGroup, ...]
    references: ReferenceTable

    @cached_property
    def _node_index(self) -> dict[int, AnchorNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def _group_index(self) -> dict[int, AnchorGroup]:
        return {g.id: g for g in self.groups}

    def node(self, node_id: int) -> AnchorNode:
        try:
            return self._node_index[node_id]
        except KeyError:
            raise KeyError(f"no node with id {node_id}") from None

    def group(self, group_id: int) -> AnchorGroup:
        try:
            return self._group_index[group_id]
        except KeyError:
            raise UnknownGroup(f"no group with id {group_id}") from None


def _in_area(x: float, y: float, area: tuple[float, float]) -> bool:
    return 0.0 <= x <= area[0] and 0.0 <= y <= area[1]


def _triangle_ok(pts: list[tuple[float, float]]) -> bool:
    (x1, y1), (x2, y2), (x3, y3) = pts
    for (ax, ay), (bx, by) in (((x1, y1), (x2, y2)), ((x1, y1), (x3, y3)), ((x2, y2), (x3, y3))):
        if math.hypot(ax - bx, ay - by) < MIN_MEMBER_SPACING:
            return False
    area2 = abs((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))
    return 0.5 * area2 >= MIN_GROUP_AREA


def _annulus_offset(rng: np.random.Generator, r_min: float, r_max: float) -> tuple[float, float]:
    r = rng.uniform(r_min, r_max)
    theta = rng.uniform(0.0, 2.0 * math.pi)
    return r * math.cos(theta), r * math.sin(theta)


def _first_triple(area: tuple[float, float], rng: np.random.Generator) -> list[tuple[float, float]]:
    for _ in range(MAX_GROUP_ATTEMPTS):
        x0 = rng.uniform(0.0, area[0])
        y0 = rng.uniform(0.0, area[1])
        pts = [(x0, y0)]
        for _ in range(2):
            dx, dy = _annulus_offset(rng, FIRST_SPACING_MIN, FIRST_SPACING_MAX)
            pts.append((x0 + dx, y0 + dy))
        if all(_in_area(x, y, area) for x, y in pts) and _triangle_ok(pts):
            return pts
    raise DeploymentFailure("could not place the initial anchor triple")


def _clear_of(
    pts: Iterable[tuple[float, float]], existing: list[tuple[float, float]]
) -> bool:
    for x, y in pts:
        for ex, ey in existing:
            if math.hypot(x - ex, y - ey) < MIN_NODE_SEPARATION:
                return False
    return True


def _triple_around(
    center: tuple[float, float],
    area: tuple[float, float],
    existing: list[tuple[float, float]],
    rng: np.random.Generator,
) -> list[tuple[float, float]] | None:
    """Sample a triple whose centroid falls exactly on ``center``.

    Offsets are drawn from an annulus and then mean-centered, which
    snaps the triple's trilateration point onto the chosen node.
    Returns None when the candidate violates area, geometry, or node
    separation limits.
    """
    offsets = [_annulus_offset(rng, GROUP_RADIUS_MIN, GROUP_RADIUS_MAX) for _ in range(3)]
    mx = sum(o[0] for o in offsets) / 3.0
    my = sum(o[1] for o in offsets) / 3.0
    pts = [(center[0] + ox - mx, center[1] + oy - my) for ox, oy in offsets]
    if not all(_in_area(x, y, area) for x, y in pts):
        return None
    if not _triangle_ok(pts):
        return None
    if not _clear_of(pts, existing):
        return None
    return pts


def deploy(
    area: tuple[float, float],
    target_count: int,
    rng: np.random.Generator,
    comm_radius: float = DEFAULT_COMM_RADIUS,
) -> Network:
    """Place ``target_count`` anchors in ``area`` and build references.

    Args:
        area: Deployment rectangle (width, height) in meters, anchored
            at the origin.
        target_count: Total anchors to place; at least 4 so the initial
            trilateration point can host a node.
        rng: Source of randomness; placement is a pure function of it.
        comm_radius: Group adjacency radius used for cross references.

    Raises:
        DeploymentFailure: when a constraint cannot be met within the
            per-group attempt budget.
    """
    if target_count < 4:
        raise DeploymentFailure(f"need at least 4 anchors, got {target_count}")
    if area[0] <= 0.0 or area[1] <= 0.0:
        raise DeploymentFailure(f"area must be positive, got {area}")
    span = FIRST_SPACING_MAX + GROUP_RADIUS_MAX
    if area[0] < span and area[1] < span:
        raise DeploymentFailure(f"area {area} is too small for group placement")

    positions: list[tuple[float, float]] = []
    node_groups: list[int] = []
    groups: list[tuple[int, list[int], tuple[float, float]]] = []

    first = _first_triple(area, rng)
    center0 = (
        (first[0][0] + first[1][0] + first[2][0]) / 3.0,
        (first[0][1] + first[1][1] + first[2][1]) / 3.0,
    )
    positions.extend(first)
    node_groups.extend([0, 0, 0])
    # The inaugural trilateration point gets its own resident node.
    positions.append(center0)
    node_groups.append(0)
    groups.append((0, [0, 1, 2, 3], center0))

    def crowding(idx: int) -> int:
        x, y = positions[idx]
        return sum(
            1
            for _, _, (cx, cy) in groups
            if math.hypot(x - cx, y - cy) < CROWDING_RADIUS
        )

    # A node may host at most one trilateration point; duplicate centers
    # would collapse two guard circles into one and open a mirror
    # ambiguity that detection cannot range away.
    center_hosts = {3}

    while target_count - len(positions) >= 3:
        group_id = len(groups)
        placed = None
        for attempt in range(MAX_GROUP_ATTEMPTS):
            eligible = [i for i in range(len(positions)) if i not in center_hosts]
            if attempt < FRONTIER_ATTEMPTS:
                size = min(SEED_CANDIDATES, len(eligible))
                picks = rng.choice(len(eligible), size=size, replace=False)
                seed_idx = min((eligible[int(i)] for i in picks), key=crowding)
            else:
                seed_idx = eligible[int(rng.integers(len(eligible)))]
            pts = _triple_around(positions[seed_idx], area, positions, rng)
            if pts is not None:
                placed = (seed_idx, pts)
                break
        if placed is None:
            raise DeploymentFailure(f"exhausted attempts while placing group {group_id}")
        seed_idx, pts = placed
        center_hosts.add(seed_idx)
        center = positions[seed_idx]
        ids = list(range(len(positions), len(positions) + 3))
        positions.extend(pts)
        node_groups.extend([group_id] * 3)
        groups.append((group_id, ids, center))

    while len(positions) < target_count:
        spot = None
        for _ in range(MAX_GROUP_ATTEMPTS):
            seed_idx = int(rng.integers(0, len(positions)))
            dx, dy = _annulus_offset(rng, GROUP_RADIUS_MIN, GROUP_RADIUS_MAX)
            cand = (positions[seed_idx][0] + dx, positions[seed_idx][1] + dy)
            if _in_area(cand[0], cand[1], area) and _clear_of([cand], positions):
                spot = cand
                break
        if spot is None:
            raise DeploymentFailure("exhausted attempts while placing a leftover anchor")
        nearest = min(
            groups,
            key=lambda g: math.hypot(spot[0] - g[2][0], spot[1] - g[2][1]),
        )
        node_id = len(positions)
        positions.append(spot)
        node_groups.append(nearest[0])
        nearest[1].append(node_id)

    nodes = tuple(
        AnchorNode(
            id=idx,
            true_pos=Point2(x, y),
            reported_pos=Point2(x, y),
            group_id=node_groups[idx],
        )
        for idx, (x, y) in enumerate(positions)
    )
    anchor_groups = tuple(
        AnchorGroup(
            id=gid,
            member_ids=tuple(member_ids),
            trilateration_point=Point2(cx, cy),
        )
        for gid, member_ids, (cx, cy) in groups
    )
    net = Network(
        area=(float(area[0]), float(area[1])),
        comm_radius=float(comm_radius),
        nodes=nodes,
        groups=anchor_groups,
        references=ReferenceTable(),
    )
    return replace(net, references=build_references(net))


def neighbor_groups(net: Network, group_id: int) -> list[int]:
    """Groups whose trilateration points lie within the comm radius.

    Sorted nearest first, ties broken by id.  The group itself and
    inactive groups are excluded.
    """
    own = net.group(group_id)
    found: list[tuple[float, int]] = []
    for g in net.groups:
        if g.id == group_id or not g.active:
            continue
        dist = true_distance(own.trilateration_point, g.trilateration_point)
        if dist <= net.comm_radius:
            found.append((dist, g.id))
    found.sort()
    return [gid for _, gid in found]


def build_references(net: Network) -> ReferenceTable:
    """Compute the deployment-time reference tables.

    Uses advertised positions throughout; run this before any attack so
    the stored records describe the honest network.

    Raises:
        DegenerateGeometry: if some group's founding triple is collinear.
    """
    m1: dict[int, Point2] = {}
    for g in net.groups:
        triple = [net.node(i) for i in g.founding_ids]
        center = g.trilateration_point
        dists = [true_distance(n.true_pos, center) for n in triple]
        try:
            fix = trilaterate([n.reported_pos for n in triple], dists)
        except DegenerateGeometry as exc:
            raise DegenerateGeometry(f"group {g.id}: {exc}") from None
        m1[g.id] = fix.position

    m_cross: dict[tuple[int, int], Point2] = {}
    for g in net.groups:
        for other_id in neighbor_groups(net, g.id):
            other = net.group(other_id)
            verifiers = [net.node(i) for i in other.founding_ids]
            anchor_pts = [v.reported_pos for v in verifiers]
            for member_id in g.member_ids:
                member = net.node(member_id)
                dists = [true_distance(v.true_pos, member.true_pos) for v in verifiers]
                try:
                    fix = trilaterate(anchor_pts, dists)
                except DegenerateGeometry as exc:
                    raise DegenerateGeometry(f"group {other_id}: {exc}") from None
                m_cross[(member_id, other_id)] = fix.position
    return ReferenceTable(m1=m1, m_cross=m_cross)


def serialize_network(net: Network, seed: int = 0) -> str:
    """Render a network to its text fixture form.

    Header lines are ``key=value``; then one line per node
    ``id,true_x,true_y,reported_x,reported_y,group_id,compromised``
    and one line per group ``group_id,member_ids;t_x,t_y`` with member
    ids space separated.  Floats use shortest round-trip notation.
    """
    lines = [
        f"area_w={net.area[0]!r}",
        f"area_h={net.area[1]!r}",
        f"comm_radius={net.comm_radius!r}",
        f"seed={seed}",
        f"n_nodes={len(net.nodes)}",
        f"n_groups={len(net.groups)}",
    ]
    for n in net.nodes:
        lines.append(
            f"{n.id},{n.true_pos.x!r},{n.true_pos.y!r},"
            f"{n.reported_pos.x!r},{n.reported_pos.y!r},"
            f"{n.group_id},{1 if n.compromised else 0}"
        )
    for g in net.groups:
        members = " ".join(str(i) for i in g.member_ids)
        lines.append(
            f"{g.id},{members};{g.trilateration_point.x!r},{g.trilateration_point.y!r}"
        )
    return "\n".join(lines) + "\n"


def parse_network(text: str) -> Network:
    """Parse a fixture produced by ``serialize_network``.

    Reference tables are rebuilt from the stored true positions, which
    reproduces the deployment-time records even when the fixture holds
    a network that was attacked after deployment.

    Raises:
        ValueError: on any structural problem in the fixture.
    """
    raw = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in raw if ln and not ln.startswith("#")]
    header: dict[str, str] = {}
    idx = 0
    while idx < len(lines) and "=" in lines[idx] and "," not in lines[idx]:
        key, _, value = lines[idx].partition("=")
        header[key.strip()] = value.strip()
        idx += 1
    for key in ("area_w", "area_h", "comm_radius", "n_nodes", "n_groups"):
        if key not in header:
            raise ValueError(f"network fixture is missing header key {key!r}")
    try:
        area = (float(header["area_w"]), float(header["area_h"]))
        comm_radius = float(header["comm_radius"])
        n_nodes = int(header["n_nodes"])
        n_groups = int(header["n_groups"])
    except ValueError as exc:
        raise ValueError(f"bad network fixture header: {exc}") from None

    body = lines[idx:]
    if len(body) != n_nodes + n_groups:
        raise ValueError(
            f"expected {n_nodes} node lines and {n_groups} group lines, got {len(body)}"
        )

    nodes = []
    for ln in body[:n_nodes]:
        parts = ln.split(",")
        if len(parts) != 7:
            raise ValueError(f"bad node line: {ln!r}")
        try:
            nodes.append(
                AnchorNode(
                    id=int(parts[0]),
                    true_pos=Point2(float(parts[1]), float(parts[2])),
                    reported_pos=Point2(float(parts[3]), float(parts[4])),
                    group_id=int(parts[5]),
                    compromised=bool(int(parts[6])),
                )
            )
        except ValueError as exc:
            raise ValueError(f"bad node line {ln!r}: {exc}") from None

    groups = []
    for ln in body[n_nodes:]:
        head, sep, tail = ln.partition(";")
        if not sep:
            raise ValueError(f"bad group line: {ln!r}")
        gid_s, _, members_s = head.partition(",")
        coords = tail.split(",")
        if len(coords) != 2:
            raise ValueError(f"bad group line: {ln!r}")
        try:
            groups.append(
                AnchorGroup(
                    id=int(gid_s),
                    member_ids=tuple(int(m) for m in members_s.split()),
                    trilateration_point=Point2(float(coords[0]), float(coords[1])),
                )
            )
        except ValueError as exc:
            raise ValueError(f"bad group line {ln!r}: {exc}") from None

    pristine = tuple(
        replace(n, reported_pos=n.true_pos, compromised=False) for n in nodes
    )
    skeleton = Network(
        area=area,
        comm_radius=comm_radius,
        nodes=pristine,
        groups=tuple(groups),
        references=ReferenceTable(),
    )
    references = build_references(skeleton)
    return replace(skeleton, nodes=tuple(nodes), references=references)
