"""Binary label archives.

Layout (little-endian throughout):

    magic (4 bytes: FTL1 or CNT1) | u8 version | u8 mode | u64 prime |
    u64 decomposition fingerprint | u64 graph hash | u32 label count |
    index: count x (u64 offset, u64 length) | label blobs

Each label blob is self-contained (it repeats mode/prime/fingerprint), so
`serialize_label` / `deserialize_label` round-trip without the archive.
Distances are u64 with an all-ones sentinel for unreachable; counts are
varint-length-prefixed little-endian magnitudes; ids are u32.

Readers fetch single labels through the index, so a query touches only the
header, the index and the byte ranges of the labels it asked for.  Wrap the
file in ReadAuditor to verify that.
"""
from __future__ import annotations

import io
import struct
from typing import IO, Iterable, Iterator

from .countlabel import CountLabel
from .faultlabel import (
    DIST_MODE,
    EXACT_MODE,
    MOD_MODE,
    FaultLabel,
    Item2,
    Item3,
    Item4,
    Item5,
    TreeTopo,
)
from .graph import DIST_INFINITY

FAULT_MAGIC = b"FTL1"
COUNT_MAGIC = b"CNT1"
_VERSION = 1
_SENTINEL = (1 << 64) - 1
_MODES = {DIST_MODE: 0, EXACT_MODE: 1, MOD_MODE: 2}
_MODE_NAMES = {v: k for k, v in _MODES.items()}


class ArchiveError(ValueError):
    pass


class _Writer:
    def __init__(self):
        self.buf = io.BytesIO()

    def u8(self, x: int) -> None:
        self.buf.write(struct.pack("<B", x))

    def u32(self, x: int) -> None:
        self.buf.write(struct.pack("<I", x))

    def i32(self, x: int) -> None:
        self.buf.write(struct.pack("<i", x))

    def u64(self, x: int) -> None:
        self.buf.write(struct.pack("<Q", x))

    def dist(self, x: int) -> None:
        self.u64(_SENTINEL if x >= DIST_INFINITY else x)

    def varint(self, x: int) -> None:
        while True:
            b = x & 0x7F
            x >>= 7
            if x:
                self.buf.write(bytes((b | 0x80,)))
            else:
                self.buf.write(bytes((b,)))
                return

    def count(self, x: int) -> None:
        raw = x.to_bytes((x.bit_length() + 7) // 8, "little") if x else b""
        self.varint(len(raw))
        self.buf.write(raw)

    def ids(self, xs: Iterable[int]) -> None:
        xs = tuple(xs)
        self.u32(len(xs))
        for x in xs:
            self.u32(x)

    def dists(self, xs: Iterable[int]) -> None:
        for x in xs:
            self.dist(x)

    def counts(self, xs: Iterable[int]) -> None:
        for x in xs:
            self.count(x)

    def getvalue(self) -> bytes:
        return self.buf.getvalue()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, k: int) -> bytes:
        if self.pos + k > len(self.data):
            raise ArchiveError("truncated label blob")
        out = self.data[self.pos:self.pos + k]
        self.pos += k
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def i32(self) -> int:
        return struct.unpack("<i", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def dist(self) -> int:
        x = self.u64()
        return DIST_INFINITY if x == _SENTINEL else x

    def varint(self) -> int:
        shift = 0
        out = 0
        while True:
            b = self.u8()
            out |= (b & 0x7F) << shift
            if not (b & 0x80):
                return out
            shift += 7

    def count(self) -> int:
        k = self.varint()
        raw = self._take(k)
        return int.from_bytes(raw, "little") if k else 0

    def ids(self) -> tuple[int, ...]:
        k = self.u32()
        return tuple(self.u32() for _ in range(k))

    def dists(self, k: int) -> tuple[int, ...]:
        return tuple(self.dist() for _ in range(k))

    def counts(self, k: int) -> tuple[int, ...]:
        return tuple(self.count() for _ in range(k))


def _write_common_prefix(w: _Writer, mode: str, prime: int | None,
                         fingerprint: int) -> None:
    w.u8(_MODES[mode])
    w.u64(prime or 0)
    w.u64(fingerprint & ((1 << 64) - 1))


def _read_common_prefix(r: _Reader) -> tuple[str, int | None, int]:
    mode = _MODE_NAMES.get(r.u8())
    if mode is None:
        raise ArchiveError("unknown mode byte")
    prime = r.u64() or None
    fingerprint = r.u64()
    return mode, prime, fingerprint


# ---------------------------------------------------------------------------
# fault labels


def serialize_label(label: FaultLabel) -> bytes:
    w = _Writer()
    _write_common_prefix(w, label.mode, label.prime, label.fingerprint)
    counting = label.counting
    w.u32(label.owner)
    w.u32(label.region)
    topo = label.topo
    w.u32(len(topo))
    for pid in range(len(topo)):
        w.i32(topo.parent[pid])
        w.u32(topo.depth[pid])
        w.u8(1 if topo.is_region[pid] else 0)
    w.ids(sorted(label.interior_pieces))
    # item2
    w.u32(len(label.item2))
    for rid in sorted(label.item2):
        entry = label.item2[rid]
        w.u32(rid)
        w.ids(entry.bnd)
        w.dists(entry.d_to)
        w.dists(entry.d_from)
        if counting:
            w.counts(entry.c_to)
            w.counts(entry.c_from)
    # item3
    it3 = label.item3
    w.ids(it3.vertices)
    w.u32(len(it3.edges))
    for t, h, wt in it3.edges:
        w.u32(t)
        w.u32(h)
        w.u64(wt)
    w.ids(it3.bnd)
    w.dists(it3.d_mat)
    if counting:
        w.counts(it3.c_mat)
    # item4
    w.u32(len(label.item4))
    for pid in sorted(label.item4):
        entry = label.item4[pid]
        w.u32(pid)
        w.ids(entry.plist)
        for arr in (entry.d_a, entry.d_b, entry.d_a2, entry.d_b2):
            w.dists(arr)
        if counting:
            for arr in (entry.c_a, entry.c_b, entry.c_a2, entry.c_b2):
                w.counts(arr)
        w.u8(1 if entry.d_c is not None else 0)
        if entry.d_c is not None:
            w.dists(entry.d_c)
            w.dists(entry.d_c2)
            if counting:
                w.counts(entry.c_c)
                w.counts(entry.c_c2)
    # item5
    w.u32(len(label.item5))
    for pid in sorted(label.item5):
        entry = label.item5[pid]
        w.u32(pid)
        w.ids(entry.sep)
        for arr in (entry.d_out, entry.d_in, entry.d_out2, entry.d_in2):
            w.dists(arr)
        if counting:
            for arr in (entry.c_out, entry.c_in, entry.c_out2, entry.c_in2):
                w.counts(arr)
    return w.getvalue()


def deserialize_label(data: bytes) -> FaultLabel:
    r = _Reader(data)
    mode, prime, fingerprint = _read_common_prefix(r)
    counting = mode != DIST_MODE
    owner = r.u32()
    region = r.u32()
    npieces = r.u32()
    parent, depth, is_region = [], [], []
    for _ in range(npieces):
        parent.append(r.i32())
        depth.append(r.u32())
        is_region.append(bool(r.u8()))
    topo = TreeTopo(parent, depth, is_region)
    interior = frozenset(r.ids())
    item2: dict[int, Item2] = {}
    for _ in range(r.u32()):
        rid = r.u32()
        bnd = r.ids()
        d_to = r.dists(len(bnd))
        d_from = r.dists(len(bnd))
        c_to = r.counts(len(bnd)) if counting else None
        c_from = r.counts(len(bnd)) if counting else None
        item2[rid] = Item2(bnd, d_to, d_from, c_to, c_from)
    vertices = r.ids()
    edges = tuple((r.u32(), r.u32(), r.u64()) for _ in range(r.u32()))
    bnd = r.ids()
    d_mat = r.dists(len(bnd) * len(bnd))
    c_mat = r.counts(len(bnd) * len(bnd)) if counting else None
    item3 = Item3(vertices, edges, bnd, d_mat, c_mat)
    item4: dict[int, Item4] = {}
    for _ in range(r.u32()):
        pid = r.u32()
        plist = r.ids()
        k = len(plist)
        d_a, d_b, d_a2, d_b2 = (r.dists(k) for _ in range(4))
        if counting:
            c_a, c_b, c_a2, c_b2 = (r.counts(k) for _ in range(4))
        else:
            c_a = c_b = c_a2 = c_b2 = None
        d_c = d_c2 = c_c = c_c2 = None
        if r.u8():
            d_c = r.dists(k)
            d_c2 = r.dists(k)
            if counting:
                c_c = r.counts(k)
                c_c2 = r.counts(k)
        item4[pid] = Item4(plist, d_a, d_b, d_a2, d_b2, c_a, c_b, c_a2, c_b2,
                           d_c, d_c2, c_c, c_c2)
    item5: dict[int, Item5] = {}
    for _ in range(r.u32()):
        pid = r.u32()
        sep = r.ids()
        k = len(sep)
        d_out, d_in, d_out2, d_in2 = (r.dists(k) for _ in range(4))
        if counting:
            c_out, c_in, c_out2, c_in2 = (r.counts(k) for _ in range(4))
        else:
            c_out = c_in = c_out2 = c_in2 = None
        item5[pid] = Item5(sep, d_out, d_in, d_out2, d_in2,
                           c_out, c_in, c_out2, c_in2)
    if r.pos != len(data):
        raise ArchiveError("trailing bytes in label blob")
    return FaultLabel(owner=owner, region=region, mode=mode, prime=prime,
                      fingerprint=fingerprint, topo=topo,
                      interior_pieces=interior, item2=item2, item3=item3,
                      item4=item4, item5=item5)


# ---------------------------------------------------------------------------
# counting labels


def serialize_count_label(label: CountLabel) -> bytes:
    w = _Writer()
    _write_common_prefix(w, label.mode, label.prime, label.fingerprint)
    w.u32(label.owner)
    w.u32(label.n)
    w.u32(len(label.entries))
    for pid, sep, d1, p1, d2, p2 in label.entries:
        w.u32(pid)
        w.ids(sep)
        w.dists(d1)
        w.counts(p1)
        w.dists(d2)
        w.counts(p2)
    return w.getvalue()


def deserialize_count_label(data: bytes) -> CountLabel:
    r = _Reader(data)
    mode, prime, fingerprint = _read_common_prefix(r)
    owner = r.u32()
    n = r.u32()
    entries = []
    for _ in range(r.u32()):
        pid = r.u32()
        sep = r.ids()
        k = len(sep)
        d1 = r.dists(k)
        p1 = r.counts(k)
        d2 = r.dists(k)
        p2 = r.counts(k)
        entries.append((pid, sep, d1, p1, d2, p2))
    if r.pos != len(data):
        raise ArchiveError("trailing bytes in label blob")
    return CountLabel(owner=owner, mode=mode, prime=prime,
                      fingerprint=fingerprint, n=n, entries=tuple(entries))


# ---------------------------------------------------------------------------
# archive container


_HEADER_FMT = "<4sBBQQQI"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)


def write_archive(fp: IO[bytes], magic: bytes, blobs: Iterator[bytes], count: int,
                  mode: str, prime: int | None, fingerprint: int,
                  graph_hash: int) -> None:
    header = struct.pack(_HEADER_FMT, magic, _VERSION, _MODES[mode], prime or 0,
                         fingerprint & ((1 << 64) - 1),
                         graph_hash & ((1 << 64) - 1), count)
    fp.write(header)
    index_pos = fp.tell()
    fp.write(b"\x00" * (16 * count))
    offsets = []
    written = 0
    for blob in blobs:
        offsets.append((fp.tell(), len(blob)))
        fp.write(blob)
        written += 1
    if written != count:
        raise ArchiveError(f"expected {count} labels, wrote {written}")
    end = fp.tell()
    fp.seek(index_pos)
    for off, length in offsets:
        fp.write(struct.pack("<QQ", off, length))
    fp.seek(end)


class ReadAuditor:
    """File wrapper recording every (offset, length) byte range read."""

    def __init__(self, fp: IO[bytes]):
        self._fp = fp
        self.spans: list[tuple[int, int]] = []

    def seek(self, pos: int, whence: int = 0):
        return self._fp.seek(pos, whence)

    def tell(self) -> int:
        return self._fp.tell()

    def read(self, size: int = -1) -> bytes:
        start = self._fp.tell()
        data = self._fp.read(size)
        self.spans.append((start, len(data)))
        return data


class ArchiveReader:
    """Random access to one archive; loads only the labels asked for."""

    def __init__(self, fp: IO[bytes], expected_magic: bytes):
        self._fp = fp
        fp.seek(0)
        raw = fp.read(_HEADER_SIZE)
        if len(raw) != _HEADER_SIZE:
            raise ArchiveError("truncated archive header")
        magic, version, mode_byte, prime, fingerprint, graph_hash, count = \
            struct.unpack(_HEADER_FMT, raw)
        if magic != expected_magic:
            raise ArchiveError(f"bad magic {magic!r}, expected {expected_magic!r}")
        if version != _VERSION:
            raise ArchiveError(f"unsupported archive version {version}")
        self.mode = _MODE_NAMES[mode_byte]
        self.prime = prime or None
        self.fingerprint = fingerprint
        self.graph_hash = graph_hash
        self.count = count
        index_raw = fp.read(16 * count)
        if len(index_raw) != 16 * count:
            raise ArchiveError("truncated archive index")
        self._index = [struct.unpack_from("<QQ", index_raw, 16 * i) for i in range(count)]
        self.header_end = _HEADER_SIZE + 16 * count

    def _blob(self, label_id: int) -> bytes:
        if not (0 <= label_id < self.count):
            raise KeyError(f"label {label_id} not in archive (0..{self.count - 1})")
        off, length = self._index[label_id]
        self._fp.seek(off)
        data = self._fp.read(length)
        if len(data) != length:
            raise ArchiveError("truncated label blob")
        return data

    def label_span(self, label_id: int) -> tuple[int, int]:
        return self._index[label_id]


class FaultArchiveReader(ArchiveReader):
    def __init__(self, fp: IO[bytes]):
        super().__init__(fp, FAULT_MAGIC)

    def load(self, label_id: int) -> FaultLabel:
        return deserialize_label(self._blob(label_id))


class CountArchiveReader(ArchiveReader):
    def __init__(self, fp: IO[bytes]):
        super().__init__(fp, COUNT_MAGIC)

    def load(self, label_id: int) -> CountLabel:
        return deserialize_count_label(self._blob(label_id))


def write_fault_archive(fp: IO[bytes], labels: Iterator[FaultLabel], count: int,
                        mode: str, prime: int | None, fingerprint: int,
                        graph_hash: int) -> None:
    write_archive(fp, FAULT_MAGIC, (serialize_label(l) for l in labels), count,
                  mode, prime, fingerprint, graph_hash)


def write_count_archive(fp: IO[bytes], labels: Iterator[CountLabel], count: int,
                        mode: str, prime: int | None, fingerprint: int,
                        graph_hash: int) -> None:
    write_archive(fp, COUNT_MAGIC, (serialize_count_label(l) for l in labels), count,
                  mode, prime, fingerprint, graph_hash)
