"""Compact lagged graphs, the move vocabulary and graph serialisation."""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence


class MoveKind(enum.IntEnum):
    ADD = 0
    DELETE = 1
    REVERSE = 2
    CHANGE_LAG = 3


@dataclass(frozen=True, order=True)
class LaggedEdge:
    parent: int
    child: int
    lag: int


@dataclass(frozen=True)
class Move:
    kind: MoveKind
    parent: int
    child: int
    new_lag: int | None = None

    @property
    def key(self) -> tuple[int, int, int, int]:
        return (int(self.kind), self.parent, self.child, self.new_lag or 0)

    @property
    def signature(self) -> tuple[int, int, int]:
        """Lag-free identity used by the tabu list."""
        return (int(self.kind), self.parent, self.child)

    def inverse(self) -> "Move":
        if self.kind is MoveKind.ADD:
            return Move(MoveKind.DELETE, self.parent, self.child)
        if self.kind is MoveKind.DELETE:
            return Move(MoveKind.ADD, self.parent, self.child)
        if self.kind is MoveKind.REVERSE:
            return Move(MoveKind.REVERSE, self.child, self.parent)
        return Move(MoveKind.CHANGE_LAG, self.parent, self.child)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.name.lower(), "parent": self.parent, "child": self.child}
        if self.new_lag is not None:
            d["new_lag"] = self.new_lag
        return d

    def __str__(self) -> str:
        tail = f" -> lag {self.new_lag}" if self.new_lag is not None else ""
        return f"{self.kind.name.lower()}({self.parent}->{self.child}){tail}"


class InvalidMove(ValueError):
    pass


class LaggedGraph:
    """Immutable variable-level graph whose edges carry a lag >= 1.

    At most one edge per ordered (parent, child) pair; self-edges are allowed.
    Cycles across variables are fine because every edge points forward in time.
    """

    __slots__ = ("n_vars", "names", "_lags", "_parents", "_hash")

    def __init__(self, n_vars: int, edges: Iterable[LaggedEdge | tuple[int, int, int]] = (),
                 names: Sequence[str] | None = None):
        self.n_vars = int(n_vars)
        self.names = tuple(names) if names is not None else tuple(f"X{i}" for i in range(n_vars))
        if len(self.names) != self.n_vars:
            raise ValueError("names length differs from n_vars")
        lags: dict[tuple[int, int], int] = {}
        for e in edges:
            i, j, lag = (e.parent, e.child, e.lag) if isinstance(e, LaggedEdge) else e
            if not (0 <= i < self.n_vars and 0 <= j < self.n_vars):
                raise ValueError(f"edge ({i}->{j}) out of range")
            if lag < 1:
                raise ValueError(f"edge ({i}->{j}) has lag {lag} < 1")
            if (i, j) in lags:
                raise ValueError(f"duplicate edge ({i}->{j})")
            lags[(i, j)] = int(lag)
        self._lags = lags
        parents: list[list[tuple[int, int]]] = [[] for _ in range(self.n_vars)]
        for (i, j), lag in sorted(lags.items()):
            parents[j].append((i, lag))
        self._parents = tuple(tuple(p) for p in parents)
        self._hash = None

    # --- queries -------------------------------------------------------
    def lag(self, parent: int, child: int) -> int | None:
        return self._lags.get((parent, child))

    def has_edge(self, parent: int, child: int) -> bool:
        return (parent, child) in self._lags

    def parents(self, child: int) -> tuple[tuple[int, int], ...]:
        """``(parent, lag)`` pairs sorted by parent index."""
        return self._parents[child]

    def edges(self) -> list[LaggedEdge]:
        return [LaggedEdge(i, j, lag) for (i, j), lag in sorted(self._lags.items())]

    def __iter__(self) -> Iterator[LaggedEdge]:
        return iter(self.edges())

    def __len__(self) -> int:
        return len(self._lags)

    def __eq__(self, other) -> bool:
        return (isinstance(other, LaggedGraph) and self.n_vars == other.n_vars
                and self._lags == other._lags)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n_vars, frozenset(self._lags.items())))
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{e.parent}->{e.child}@{e.lag}" for e in self.edges())
        return f"LaggedGraph(n_vars={self.n_vars}, edges=[{body}])"

    # --- construction --------------------------------------------------
    def with_parents(self, child: int, parents: Sequence[tuple[int, int]]) -> "LaggedGraph":
        """Copy of the graph with ``child``'s incoming edges replaced."""
        edges = [(i, j, lag) for (i, j), lag in self._lags.items() if j != child]
        edges.extend((i, child, lag) for i, lag in parents)
        return LaggedGraph(self.n_vars, edges, self.names)

    def with_names(self, names: Sequence[str]) -> "LaggedGraph":
        return LaggedGraph(self.n_vars, self.edges(), names)


def is_admissible(g: LaggedGraph, m: Move, l_max: int | None = None) -> bool:
    present = g.has_edge(m.parent, m.child)
    if m.kind is MoveKind.ADD:
        return not present
    if m.kind is MoveKind.DELETE:
        return present
    if m.kind is MoveKind.REVERSE:
        return (present and m.parent != m.child
                and not g.has_edge(m.child, m.parent))
    if not present or m.new_lag is None or m.new_lag < 1:
        return False
    if l_max is not None and m.new_lag > l_max:
        return False
    return m.new_lag != g.lag(m.parent, m.child)


def apply_move(g: LaggedGraph, m: Move, l_max: int | None = None) -> LaggedGraph:
    """Return the graph after ``m``; new and reversed edges start at lag 1."""
    if not is_admissible(g, m, l_max):
        raise InvalidMove(f"{m} is not admissible on {g!r}")
    edges = {(e.parent, e.child): e.lag for e in g.edges()}
    if m.kind is MoveKind.ADD:
        edges[(m.parent, m.child)] = 1
    elif m.kind is MoveKind.DELETE:
        del edges[(m.parent, m.child)]
    elif m.kind is MoveKind.REVERSE:
        del edges[(m.parent, m.child)]
        edges[(m.child, m.parent)] = 1
    else:
        edges[(m.parent, m.child)] = m.new_lag
    return LaggedGraph(g.n_vars, [(i, j, lag) for (i, j), lag in edges.items()], g.names)


def enumerate_neighbourhood(g: LaggedGraph, l_max: int) -> list[Move]:
    """All admissible single moves, sorted by ``(kind, parent, child, new_lag)``.

    Lag changes are single steps of +/-1 within ``[1, l_max]``.
    """
    n = g.n_vars
    moves = [Move(MoveKind.ADD, i, j)
             for i in range(n) for j in range(n) if not g.has_edge(i, j)]
    edges = g.edges()
    moves += [Move(MoveKind.DELETE, e.parent, e.child) for e in edges]
    moves += [Move(MoveKind.REVERSE, e.parent, e.child) for e in edges
              if e.parent != e.child and not g.has_edge(e.child, e.parent)]
    for e in edges:
        if e.lag > 1:
            moves.append(Move(MoveKind.CHANGE_LAG, e.parent, e.child, e.lag - 1))
        if e.lag < l_max:
            moves.append(Move(MoveKind.CHANGE_LAG, e.parent, e.child, e.lag + 1))
    moves.sort(key=lambda m: m.key)
    return moves


def check_unrolled_acyclic(g: LaggedGraph) -> bool:
    """True when the time-unrolled graph is a DAG, i.e. every lag is positive."""
    return all(e.lag >= 1 for e in g.edges())


# --- serialisation -------------------------------------------------------

def graph_to_dict(g: LaggedGraph) -> dict:
    return {
        "n_vars": g.n_vars,
        "names": list(g.names),
        "edges": [{"parent": g.names[e.parent], "child": g.names[e.child], "lag": e.lag}
                  for e in g.edges()],
    }


def graph_from_dict(d: Mapping) -> LaggedGraph:
    try:
        names = list(d["names"])
        n_vars = int(d.get("n_vars", len(names)))
        index = {name: k for k, name in enumerate(names)}
        edges = []
        for e in d["edges"]:
            i = index[e["parent"]] if isinstance(e["parent"], str) else int(e["parent"])
            j = index[e["child"]] if isinstance(e["child"], str) else int(e["child"])
            edges.append((i, j, int(e["lag"])))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed graph document: {exc}") from None
    return LaggedGraph(n_vars, edges, names)


def graph_to_json(g: LaggedGraph) -> str:
    return json.dumps(graph_to_dict(g), indent=2) + "\n"


def graph_from_json(text: str) -> LaggedGraph:
    return graph_from_dict(json.loads(text))


def graph_to_edge_csv(g: LaggedGraph) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["parent", "child", "lag"])
    for e in g.edges():
        writer.writerow([g.names[e.parent], g.names[e.child], e.lag])
    return buf.getvalue()


def graph_from_edge_csv(text: str, names: Sequence[str]) -> LaggedGraph:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["parent", "child", "lag"]:
        raise ValueError(f"unexpected edge-list header {header}")
    index = {name: k for k, name in enumerate(names)}
    edges = [(index[p], index[c], int(lag)) for p, c, lag in reader]
    return LaggedGraph(len(names), edges, names)


def save_graph(g: LaggedGraph, path) -> None:
    Path(path).write_text(graph_to_json(g), encoding="utf-8")


def load_graph(path) -> LaggedGraph:
    return graph_from_json(Path(path).read_text(encoding="utf-8"))
