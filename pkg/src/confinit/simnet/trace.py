"""Run trace: a columnar audit log of protocol events, serialized as JSON lines."""

from __future__ import annotations

import enum
import hashlib
import io
import json
import math
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


class EventKind(enum.IntEnum):
    SEND = 0
    DELIVER = 1
    DROP = 2
    JOIN = 3
    LEAVE = 4
    LEADER = 5
    SUSPECT = 6
    UNSUSPECT = 7
    CONVICT = 8
    CLEAR = 9
    INCONCLUSIVE = 10
    DEFERRED = 11
    ALERT_SEND = 12
    ALERT_FLOOD = 13
    ALERT_ADOPT = 14
    ALERT_DUP = 15
    BLOCKED = 16


# Kinds recorded only at trace_level="full"; BLOCKED is logged once per
# (receiver, sender) pair otherwise.
VERBOSE_KINDS = frozenset({EventKind.SEND, EventKind.DELIVER, EventKind.DROP, EventKind.ALERT_DUP})
VERDICT_KINDS = frozenset({EventKind.CONVICT, EventKind.CLEAR, EventKind.INCONCLUSIVE, EventKind.DEFERRED})

# Names of the three float slots per kind; "#" marks values stored as ints.
_SLOTS: dict[EventKind, tuple[str, ...]] = {
    EventKind.SEND: ("iR", "aR", "#nR"),
    EventKind.SUSPECT: ("reading",),
    EventKind.UNSUSPECT: ("reading",),
    EventKind.CONVICT: ("reading", "base", "joint"),
    EventKind.CLEAR: ("reading", "base", "joint"),
    EventKind.INCONCLUSIVE: ("reading", "base", "joint"),
    EventKind.DEFERRED: ("reading",),
    EventKind.ALERT_SEND: ("#to",),
    EventKind.ALERT_ADOPT: ("#detector",),
    EventKind.ALERT_DUP: ("#detector",),
}

_COLUMNS = ("t", "node", "kind", "peer", "a", "b", "c")
def _num(v: float) -> str:
    return repr(v) if math.isfinite(v) else "null"


def _int(v: float) -> str:
    return str(int(v))


def _template(kind: EventKind) -> tuple[str, tuple]:
    fmt = '{"t": %s, "node": %s, "event": "' + kind.name.lower() + '", "peer": %s'
    slots = _SLOTS.get(kind, ())
    for slot in slots:
        fmt += ', "' + slot.lstrip("#") + '": %s'
    return fmt + "}\n", tuple(_int if s.startswith("#") else _num for s in slots)


_TEMPLATES = {int(k): _template(k) for k in EventKind}


def _empty_columns() -> dict[str, np.ndarray]:
    return {
        "t": np.empty(0, np.float64),
        "node": np.empty(0, np.int64),
        "kind": np.empty(0, np.int64),
        "peer": np.empty(0, np.int64),
        "a": np.empty(0, np.float64),
        "b": np.empty(0, np.float64),
        "c": np.empty(0, np.float64),
    }


@dataclass
class Trace:
    meta: dict[str, Any] = field(default_factory=dict)
    columns: dict[str, np.ndarray] = field(default_factory=_empty_columns)

    @classmethod
    def from_arrays(cls, meta: dict[str, Any], t, node, kind, peer, a, b, c) -> Trace:
        cols = {
            "t": np.asarray(t, np.float64),
            "node": np.asarray(node, np.int64),
            "kind": np.asarray(kind, np.int64),
            "peer": np.asarray(peer, np.int64),
            "a": np.asarray(a, np.float64),
            "b": np.asarray(b, np.float64),
            "c": np.asarray(c, np.float64),
        }
        return cls(dict(meta), cols)

    def __len__(self) -> int:
        return int(self.columns["t"].shape[0])

    def __getattr__(self, name: str) -> np.ndarray:
        cols = self.__dict__.get("columns")
        if cols is not None and name in cols:
            return cols[name]
        raise AttributeError(name)

    def select(self, *kinds: EventKind) -> np.ndarray:
        return np.isin(self.columns["kind"], [int(k) for k in kinds])

    def records(self) -> Iterator[dict[str, Any]]:
        cols = self.columns
        for i in range(len(self)):
            kind = EventKind(int(cols["kind"][i]))
            rec: dict[str, Any] = {
                "t": float(cols["t"][i]),
                "node": int(cols["node"][i]),
                "event": kind.name.lower(),
                "peer": int(cols["peer"][i]),
            }
            for slot, col in zip(_SLOTS.get(kind, ()), "abc"):
                v = float(cols[col][i])
                if slot.startswith("#"):
                    rec[slot[1:]] = int(v)
                else:
                    rec[slot] = v if math.isfinite(v) else None
            yield rec

    def write_jsonl(self, fh: io.TextIOBase) -> None:
        fh.write(json.dumps({"event": "run_start", "meta": self.meta}, sort_keys=True) + "\n")
        # Same bytes as json.dumps(rec) for each of records(), built from
        # per-kind templates over pre-rendered columns; dumping dicts row by
        # row is several times slower.
        cols = self.columns
        ts = map(repr, cols["t"].tolist())
        nodes = map(str, cols["node"].tolist())
        peers = map(str, cols["peer"].tolist())
        kinds = cols["kind"].tolist()
        abc = [cols[c].tolist() for c in "abc"]
        lines = []
        for t, node, kind, peer, a, b, c in zip(ts, nodes, kinds, peers, *abc):
            fmt, conv = _TEMPLATES[kind]
            if len(conv) == 0:
                lines.append(fmt % (t, node, peer))
            elif len(conv) == 1:
                lines.append(fmt % (t, node, peer, conv[0](a)))
            else:
                lines.append(fmt % (t, node, peer, conv[0](a), conv[1](b), conv[2](c)))
            if len(lines) >= 65536:
                fh.write("".join(lines))
                lines.clear()
        fh.write("".join(lines))

    def to_jsonl(self) -> str:
        buf = io.StringIO()
        self.write_jsonl(buf)
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            self.write_jsonl(fh)

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()

    @classmethod
    def from_jsonl(cls, text: str) -> Trace:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        meta: dict[str, Any] = {}
        if lines and json.loads(lines[0]).get("event") == "run_start":
            meta = json.loads(lines[0])["meta"]
            lines = lines[1:]
        n = len(lines)
        t = np.empty(n)
        node = np.empty(n, np.int64)
        kind = np.empty(n, np.int64)
        peer = np.empty(n, np.int64)
        slots = np.full((3, n), np.nan)
        for i, line in enumerate(lines):
            rec = json.loads(line)
            k = EventKind[rec["event"].upper()]
            t[i], node[i], kind[i], peer[i] = rec["t"], rec["node"], int(k), rec["peer"]
            for j, slot in enumerate(_SLOTS.get(k, ())):
                v = rec.get(slot.lstrip("#"))
                slots[j, i] = np.nan if v is None else v
        return cls.from_arrays(meta, t, node, kind, peer, *slots)

    @classmethod
    def load(cls, path: str | Path) -> Trace:
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))

    def same_events(self, other: Trace) -> bool:
        if len(self) != len(other):
            return False
        for name in _COLUMNS:
            x, y = self.columns[name], other.columns[name]
            if x.dtype.kind == "f":
                if not np.array_equal(x, y, equal_nan=True):
                    return False
            elif not np.array_equal(x, y):
                return False
        return True
