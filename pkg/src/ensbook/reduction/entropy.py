"""Run-length + canonical Huffman coding of quantized int16 coefficients.

Symbols are (zero-run length, magnitude class) pairs in the JPEG style:
a symbol says "skip `run` zeros, then a value whose magnitude has `cls`
bits", followed by `cls` raw bits identifying the value.  Two pure control
symbols exist: EOB (0, 0) ends the block (the rest is zeros) and ZRL
(255, 0) skips 255 zeros without emitting a value.  A canonical Huffman
table built per block is serialized at the front of the stream, so decoding
needs nothing but the bytes and the expected coefficient count.
"""

from __future__ import annotations

import heapq
import struct

import numpy as np

from ..errors import BlockDecodeError

_EOB = (0, 0)
_ZRL = (255, 0)
_MAX_RUN = 255
_MAX_CLS = 16
_MAX_CODE_LEN = 48


def _value_class(v: int) -> int:
    return int(abs(v)).bit_length()


def _value_bits(v: int, cls: int) -> int:
    return v if v > 0 else v + (1 << cls) - 1


def _bits_value(bits: int, cls: int) -> int:
    if bits >= 1 << (cls - 1):
        return bits
    return bits - (1 << cls) + 1


def _tokenize(ints: np.ndarray) -> list[tuple[tuple[int, int], int, int]]:
    """(symbol, extra_bits, extra_len) triples for one coefficient vector."""
    tokens = []
    run = 0
    for v in ints:
        v = int(v)
        if v == 0:
            run += 1
            continue
        while run > _MAX_RUN:
            tokens.append((_ZRL, 0, 0))
            run -= _MAX_RUN
        cls = _value_class(v)
        tokens.append(((run, cls), _value_bits(v, cls), cls))
        run = 0
    tokens.append((_EOB, 0, 0))
    return tokens


def _code_lengths(freqs: dict[tuple[int, int], int]) -> dict[tuple[int, int], int]:
    if len(freqs) == 1:
        return {next(iter(freqs)): 1}
    heap = [(f, i, [sym]) for i, (sym, f) in enumerate(sorted(freqs.items()))]
    heapq.heapify(heap)
    lengths = {sym: 0 for sym in freqs}
    tiebreak = len(heap)
    while len(heap) > 1:
        fa, _, a = heapq.heappop(heap)
        fb, _, b = heapq.heappop(heap)
        for sym in a + b:
            lengths[sym] += 1
        heapq.heappush(heap, (fa + fb, tiebreak, a + b))
        tiebreak += 1
    return lengths


def _canonical_codes(lengths: dict[tuple[int, int], int]) -> list[tuple[tuple[int, int], int, int]]:
    """(symbol, length, code) in canonical order: by length, then symbol."""
    ordered = sorted(lengths.items(), key=lambda kv: (kv[1], kv[0]))
    out = []
    code = 0
    prev_len = ordered[0][1]
    for sym, length in ordered:
        code <<= length - prev_len
        out.append((sym, length, code))
        code += 1
        prev_len = length
    return out


class _BitWriter:
    def __init__(self):
        self.buf = bytearray()
        self.acc = 0
        self.nbits = 0

    def put(self, value: int, nbits: int) -> None:
        self.acc = (self.acc << nbits) | (value & ((1 << nbits) - 1))
        self.nbits += nbits
        while self.nbits >= 8:
            self.nbits -= 8
            self.buf.append((self.acc >> self.nbits) & 0xFF)
        self.acc &= (1 << self.nbits) - 1

    def getvalue(self) -> bytes:
        if self.nbits:
            self.buf.append((self.acc << (8 - self.nbits)) & 0xFF)
            self.acc = 0
            self.nbits = 0
        return bytes(self.buf)


class _BitReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.acc = 0
        self.nbits = 0

    def take(self, nbits: int) -> int:
        while self.nbits < nbits:
            if self.pos >= len(self.data):
                raise BlockDecodeError("bit stream exhausted before end marker")
            self.acc = (self.acc << 8) | self.data[self.pos]
            self.pos += 1
            self.nbits += 8
        self.nbits -= nbits
        value = (self.acc >> self.nbits) & ((1 << nbits) - 1)
        self.acc &= (1 << self.nbits) - 1
        return value


def rle_huffman_encode(ints: np.ndarray) -> bytes:
    """Encode an int16 vector to a self-describing byte stream.

    Table layout ahead of the bitstream: entry count (u16), max code length
    (u8), one count byte per length 1..max, then the symbols as (run, cls)
    byte pairs in canonical order.
    """
    tokens = _tokenize(np.asarray(ints, dtype=np.int16))
    freqs: dict[tuple[int, int], int] = {}
    for sym, _, _ in tokens:
        freqs[sym] = freqs.get(sym, 0) + 1
    table = _canonical_codes(_code_lengths(freqs))

    max_len = table[-1][1]
    counts = [0] * (max_len + 1)
    for _, length, _ in table:
        counts[length] += 1
    out = bytearray(struct.pack("<HB", len(table), max_len))
    out += struct.pack(f"<{max_len}H", *counts[1:])
    for (run, cls), _, _ in table:
        out += struct.pack("<BB", run, cls)

    codes = {sym: (length, code) for sym, length, code in table}
    bits = _BitWriter()
    for sym, extra, extra_len in tokens:
        length, code = codes[sym]
        bits.put(code, length)
        if extra_len:
            bits.put(extra, extra_len)
    return bytes(out + bits.getvalue())


def rle_huffman_decode(data: bytes, n: int) -> np.ndarray:
    """Exact inverse of :func:`rle_huffman_encode` for an n-vector.

    Corrupt input raises BlockDecodeError; it never crashes or returns a
    vector of the wrong length.
    """
    if len(data) < 3:
        raise BlockDecodeError("stream shorter than its table header")
    count, max_len = struct.unpack_from("<HB", data, 0)
    if count < 1 or max_len < 1 or max_len > _MAX_CODE_LEN:
        raise BlockDecodeError("bad symbol table header")
    table_end = 3 + 2 * max_len + 2 * count
    if len(data) < table_end:
        raise BlockDecodeError("symbol table truncated")
    counts = struct.unpack_from(f"<{max_len}H", data, 3)
    if sum(counts) != count or counts[-1] == 0:
        raise BlockDecodeError("length histogram does not match entry count")

    decode_map: dict[tuple[int, int], tuple[int, int]] = {}
    sym_off = 3 + 2 * max_len
    code = 0
    prev_len = 0
    idx = 0
    for length in range(1, max_len + 1):
        for _ in range(counts[length - 1]):
            run, cls = data[sym_off + 2 * idx], data[sym_off + 2 * idx + 1]
            idx += 1
            if cls > _MAX_CLS or (cls == 0 and (run, cls) not in (_EOB, _ZRL)):
                raise BlockDecodeError(f"invalid symbol ({run}, {cls}) in table")
            code <<= length - prev_len
            prev_len = length
            key = (length, code)
            if key in decode_map:
                raise BlockDecodeError("duplicate canonical code")
            decode_map[key] = (run, cls)
            code += 1
            if code > (1 << length):
                raise BlockDecodeError("code lengths violate the Kraft bound")

    reader = _BitReader(data[table_end:])
    out = np.zeros(n, dtype=np.int16)
    pos = 0
    while True:
        length = 0
        code = 0
        while True:
            code = (code << 1) | reader.take(1)
            length += 1
            sym = decode_map.get((length, code))
            if sym is not None:
                break
            if length > _MAX_CODE_LEN:
                raise BlockDecodeError("bit pattern matches no symbol")
        if sym == _EOB:
            return out
        if sym == _ZRL:
            pos += _MAX_RUN
            if pos > n:
                raise BlockDecodeError("zero run extends past the block")
            continue
        run, cls = sym
        pos += run
        if pos >= n:
            raise BlockDecodeError("coefficient lands past the block")
        value = _bits_value(reader.take(cls), cls)
        if not -32768 <= value <= 32767:
            raise BlockDecodeError("decoded value outside int16 range")
        out[pos] = value
        pos += 1
