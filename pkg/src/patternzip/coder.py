"""Bit-exact entropy coding: bitstreams, Elias delta, a range coder, and the
on-disk container.

The range coder works on integer frequency views (``total_freq`` /
``symbol_range`` / ``locate``) exposed by the sequential models, so encoder
and decoder run the identical integer arithmetic on both sides. State is a
64-bit low register and a range renormalized 32 bits at a time with explicit
carry propagation into already-emitted words; the flush picks the value with
the most trailing zeros inside the final interval, so the tail costs at most
one bit beyond the assigned probability and probability-1 streams emit
nothing at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from patternzip.patterns import detokenize, extract_pattern, tokenize

MASK64 = (1 << 64) - 1
TOP = 1 << 32

MAGIC = b"PATC"
VERSION = 1
MODEL_IDS = {"known-k": 1, "mixture": 2, "unknown-k": 3, "two-part": 4}
_ID_MODELS = {v: k for k, v in MODEL_IDS.items()}


class CoderError(ValueError):
    """Malformed or truncated coded data."""


class BitStream:
    """Append-only bit buffer with exact bit length."""

    __slots__ = ("_buf", "_nbits")

    def __init__(self):
        self._buf = bytearray()
        self._nbits = 0

    @classmethod
    def from_bytes(cls, data: bytes, bit_length: int | None = None) -> "BitStream":
        bs = cls()
        bs._buf = bytearray(data)
        bs._nbits = 8 * len(data) if bit_length is None else bit_length
        if bs._nbits > 8 * len(data):
            raise ValueError("bit_length exceeds data")
        return bs

    @property
    def bit_length(self) -> int:
        return self._nbits

    def append_bit(self, b: int) -> None:
        self.append_bits(b & 1, 1)

    def append_bits(self, value: int, nbits: int) -> None:
        """Append the nbits-wide big-endian representation of value."""
        if nbits < 0 or value < 0 or (nbits < value.bit_length()):
            raise ValueError("value does not fit in nbits")
        if nbits == 0:
            return
        used = self._nbits & 7
        if used:
            take = min(8 - used, nbits)
            chunk = (value >> (nbits - take)) & ((1 << take) - 1)
            self._buf[-1] |= chunk << (8 - used - take)
            self._nbits += take
            nbits -= take
            if nbits == 0:
                return
            value &= (1 << nbits) - 1
        while nbits >= 8:
            nbits -= 8
            self._buf.append((value >> nbits) & 0xFF)
            self._nbits += 8
        if nbits:
            self._buf.append((value & ((1 << nbits) - 1)) << (8 - nbits))
            self._nbits += nbits

    def extend(self, other: "BitStream") -> None:
        for chunk, nbits in other._chunks():
            self.append_bits(chunk, nbits)

    def _chunks(self):
        full, rem = divmod(self._nbits, 8)
        for i in range(full):
            yield self._buf[i], 8
        if rem:
            yield self._buf[full] >> (8 - rem), rem

    def rstrip_zeros(self) -> None:
        """Drop trailing zero bits (the decoder zero-pads past the end)."""
        while self._nbits:
            i = self._nbits - 1
            if (self._buf[i >> 3] >> (7 - (i & 7))) & 1:
                break
            self._nbits -= 1
        del self._buf[(self._nbits + 7) >> 3:]

    def to_bytes(self) -> bytes:
        out = bytearray(self._buf[: (self._nbits + 7) >> 3])
        rem = self._nbits & 7
        if rem and out:
            out[-1] &= (0xFF << (8 - rem)) & 0xFF
        return bytes(out)

    def __len__(self) -> int:
        return self._nbits


class BitReader:
    """Sequential bit reader with strict and zero-padded access.

    Strict reads past the end raise "unexpected end of stream". Padded reads
    (used only by the range decoder, whose tail bits are trimmed zeros)
    tolerate up to 64 bits of zero padding before declaring truncation.
    """

    __slots__ = ("_data", "_nbits", "_pos", "_overrun")

    _PAD_SLACK = 64

    def __init__(self, data: bytes, bit_length: int | None = None):
        self._data = data
        self._nbits = 8 * len(data) if bit_length is None else bit_length
        self._pos = 0
        self._overrun = 0

    @property
    def position(self) -> int:
        return self._pos

    @property
    def remaining(self) -> int:
        return max(0, self._nbits - self._pos)

    def _bit_at(self, i: int) -> int:
        return (self._data[i >> 3] >> (7 - (i & 7))) & 1

    def read_bits(self, n: int) -> int:
        if self._pos + n > self._nbits:
            raise CoderError("unexpected end of stream")
        v = 0
        pos = self._pos
        # Byte-aligned fast path for long fields.
        while n >= 8 and (pos & 7) == 0:
            v = (v << 8) | self._data[pos >> 3]
            pos += 8
            n -= 8
        for _ in range(n):
            v = (v << 1) | self._bit_at(pos)
            pos += 1
        self._pos = pos
        return v

    def read_bit(self) -> int:
        return self.read_bits(1)

    def read_bits_padded(self, n: int) -> int:
        avail = max(0, min(n, self._nbits - self._pos))
        v = self.read_bits(avail) if avail else 0
        short = n - avail
        if short:
            self._overrun += short
            if self._overrun > self._PAD_SLACK:
                raise CoderError("unexpected end of stream")
            v <<= short
            self._pos += short
        return v

    def align_byte(self) -> None:
        self._pos = (self._pos + 7) & ~7
        if self._pos > self._nbits:
            raise CoderError("unexpected end of stream")


# --- Elias delta --------------------------------------------------------------


def elias_delta_encode(m: int, out: BitStream | None = None) -> BitStream:
    """Append the Elias delta code of m >= 1; returns the stream."""
    if m < 1:
        raise ValueError("Elias delta encodes integers >= 1")
    if out is None:
        out = BitStream()
    low_len = m.bit_length() - 1        # bits of m below its leading 1
    lp = low_len + 1
    u = lp.bit_length() - 1             # leading zeros announcing |lp|
    out.append_bits(lp, 2 * u + 1)      # u zeros then lp's u+1 bits
    if low_len:
        out.append_bits(m & ((1 << low_len) - 1), low_len)
    return out


def elias_delta_decode(reader: BitReader) -> int:
    u = 0
    while reader.read_bit() == 0:
        u += 1
        if u > 64:
            raise CoderError("corrupt integer code")
    lp = (1 << u) | (reader.read_bits(u) if u else 0)
    low_len = lp - 1
    if low_len > 4096:
        raise CoderError("corrupt integer code")
    return (1 << low_len) | (reader.read_bits(low_len) if low_len else 0)


def elias_delta_length(m: int) -> int:
    """Code length in bits: floor(log2 m) + 2*floor(log2(floor(log2 m)+1)) + 1."""
    if m < 1:
        raise ValueError("Elias delta encodes integers >= 1")
    low_len = m.bit_length() - 1
    return low_len + 2 * ((low_len + 1).bit_length() - 1) + 1


# --- range coder --------------------------------------------------------------


class RangeEncoder:
    """64-bit-low/32-bit-renormalization arithmetic encoder."""

    def __init__(self):
        self._low = 0
        self._rng = 1 << 64
        self._words: list[int] = []

    def encode(self, cumlo: int, cumhi: int, total: int) -> None:
        if not 0 <= cumlo < cumhi <= total or total > TOP:
            raise ValueError("bad frequency interval")
        r = self._rng
        r_lo = r * cumlo // total
        r_hi = r * cumhi // total
        self._low += r_lo
        if self._low > MASK64:
            self._propagate_carry()
            self._low &= MASK64
        self._rng = r_hi - r_lo
        while self._rng < TOP:
            self._words.append((self._low >> 32) & 0xFFFFFFFF)
            self._low = (self._low << 32) & MASK64
            self._rng <<= 32

    def _propagate_carry(self) -> None:
        i = len(self._words) - 1
        while True:
            if i < 0:
                raise AssertionError("carry out of stream")
            self._words[i] = (self._words[i] + 1) & 0xFFFFFFFF
            if self._words[i]:
                return
            i -= 1

    def finish(self) -> BitStream:
        """Seal the interval and return the payload bits."""
        z = self._rng.bit_length() - 1   # 2^z <= rng, so a multiple exists
        v = ((self._low + (1 << z) - 1) >> z) << z
        if v > MASK64:
            self._propagate_carry()
            v &= MASK64
        bs = BitStream()
        for w in self._words:
            bs.append_bits(w, 32)
        if z < 64:
            bs.append_bits(v >> z, 64 - z)
        # No trailing trim: the decoder's pad allowance is calibrated to the
        # exact emitted length (its lookahead overrun is z <= 64 bits).
        return bs


class RangeDecoder:
    """Mirror image of :class:`RangeEncoder` over a padded bit reader."""

    def __init__(self, reader: BitReader):
        self._rd = reader
        self._point = reader.read_bits_padded(64)
        self._rng = 1 << 64

    def decode_target(self, total: int) -> int:
        """Cumulative-frequency value identifying the next slot."""
        return ((self._point + 1) * total - 1) // self._rng

    def consume(self, cumlo: int, cumhi: int, total: int) -> None:
        r = self._rng
        r_lo = r * cumlo // total
        self._point -= r_lo
        self._rng = r * cumhi // total - r_lo
        if not 0 <= self._point < self._rng:
            raise CoderError("corrupt stream")
        while self._rng < TOP:
            self._point = (self._point << 32) | self._rd.read_bits_padded(32)
            self._rng <<= 32


def arith_encode(model, pattern) -> BitStream:
    """Encode a pattern with a fresh sequential model; returns payload bits."""
    if model.t != 0:
        raise ValueError("model must be fresh")
    enc = RangeEncoder()
    for j in pattern:
        j = int(j)
        total = model.total_freq()
        lo, hi = model.symbol_range(j)
        enc.encode(lo, hi, total)
        model.push(j)
    return enc.finish()


def arith_decode(model, bits: "BitStream | BitReader", n: int) -> list[int]:
    """Decode n pattern symbols; mirror of :func:`arith_encode`."""
    if model.t != 0:
        raise ValueError("model must be fresh")
    reader = BitReader(bits.to_bytes(), bits.bit_length) if isinstance(bits, BitStream) else bits
    dec = RangeDecoder(reader)
    out = []
    for _ in range(n):
        total = model.total_freq()
        target = dec.decode_target(total)
        j = model.locate(target)
        lo, hi = model.symbol_range(j)
        dec.consume(lo, hi, total)
        model.push(j)
        out.append(j)
    return out


# --- container ----------------------------------------------------------------


@dataclass
class Container:
    """Parsed form of the on-disk format.

    Layout: magic "PATC", version byte, model id byte, then a bit-packed
    header (model params, n as Elias delta, dictionary as Elias count plus
    length-prefixed byte strings), then the byte-aligned coder payload.
    """

    model: str
    params: dict
    n: int
    dictionary: list[bytes]
    payload: BitStream = field(repr=False)

    def to_bytes(self) -> bytes:
        head = BitStream()
        _write_params(head, self.model, self.params)
        elias_delta_encode(self.n, head)
        elias_delta_encode(len(self.dictionary) + 1, head)
        for tok in self.dictionary:
            if not tok:
                raise ValueError("empty dictionary token")
            elias_delta_encode(len(tok), head)
            for byte in tok:
                head.append_bits(byte, 8)
        blob = bytearray(MAGIC)
        blob.append(VERSION)
        blob.append(MODEL_IDS[self.model])
        blob += head.to_bytes()
        blob += self.payload.to_bytes()
        return bytes(blob)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Container":
        if blob[:4] != MAGIC:
            raise CoderError("bad magic")
        if len(blob) < 6:
            raise CoderError("unexpected end of stream")
        if blob[4] != VERSION:
            raise CoderError(f"unsupported version {blob[4]}")
        model = _ID_MODELS.get(blob[5])
        if model is None:
            raise CoderError(f"unknown model id {blob[5]}")
        reader = BitReader(blob[6:])
        params = _read_params(reader, model)
        n = elias_delta_decode(reader)
        count = elias_delta_decode(reader) - 1
        dictionary = []
        for _ in range(count):
            ln = elias_delta_decode(reader)
            dictionary.append(bytes(reader.read_bits(8) for _ in range(ln)))
        reader.align_byte()
        start = reader.position >> 3
        payload = BitStream.from_bytes(blob[6 + start:])
        return cls(model=model, params=params, n=n, dictionary=dictionary, payload=payload)


def eps_to_fixed(eps: float) -> int:
    """Quantize eps in (0,1) to its 16-bit fixed-point numerator."""
    num = round(float(eps) * 65536)
    if not 1 <= num <= 65535:
        raise ValueError("eps out of range for 16-bit fixed point")
    return num


def _write_params(out: BitStream, model: str, params: dict) -> None:
    if model == "known-k":
        elias_delta_encode(params["k"], out)
    elif model == "mixture":
        elias_delta_encode(params["j_max"], out)
    elif model in ("unknown-k", "two-part"):
        out.append_bits(params["eps_num"], 16)
    else:
        raise ValueError(f"unknown model {model!r}")


def _read_params(reader: BitReader, model: str) -> dict:
    if model == "known-k":
        return {"k": elias_delta_decode(reader)}
    if model == "mixture":
        return {"j_max": elias_delta_decode(reader)}
    num = reader.read_bits(16)
    if num == 0:
        raise CoderError("corrupt eps field")
    return {"eps_num": num}


def _fresh_model(container: Container):
    from patternzip import models

    if container.model == "known-k":
        return models.pattern_known_k_model(container.params["k"])
    if container.model == "mixture":
        return models.pattern_mixture_model(container.n, j_max=container.params["j_max"])
    if container.model == "unknown-k":
        return models.pattern_unknown_k_model(container.params["eps_num"] / 65536.0)
    raise ValueError(f"no sequential model for {container.model!r}")


def compress(
    data: bytes,
    model: str = "known-k",
    eps: float = 0.1,
    tokens: str = "bytes",
    j_max: int | None = None,
) -> Container:
    """Compress raw bytes into a container.

    The input is tokenized, split into a first-occurrence dictionary plus a
    pattern, and the pattern is entropy-coded under the chosen model. The
    dictionary carries all symbol identities; the payload never does.
    """
    if model not in MODEL_IDS:
        raise ValueError(f"unknown model {model!r}")
    if not data:
        raise ValueError("empty input")
    toks = tokenize(data, tokens)
    pattern = extract_pattern(toks)
    n = len(pattern)
    k = max(pattern)
    seen: list[bytes] = []
    lookup: dict = {}
    for tok in toks:
        if tok not in lookup:
            lookup[tok] = True
            seen.append(bytes([tok]) if isinstance(tok, int) else bytes(tok))

    if model == "known-k":
        params = {"k": k}
        from patternzip.models import pattern_known_k_model

        payload = arith_encode(pattern_known_k_model(k), pattern)
    elif model == "mixture":
        from patternzip.models import pattern_mixture_model

        if n < 2:
            raise ValueError("mixture model needs n >= 2")
        m = pattern_mixture_model(n, j_max=j_max)
        params = {"j_max": m.j_max}
        payload = arith_encode(m, pattern)
    elif model == "unknown-k":
        num = eps_to_fixed(eps)
        params = {"eps_num": num}
        from patternzip.models import pattern_unknown_k_model

        payload = arith_encode(pattern_unknown_k_model(num / 65536.0), pattern)
    else:  # two-part
        num = eps_to_fixed(eps)
        params = {"eps_num": num}
        from patternzip.twopart import twopart_encode

        payload = twopart_encode(pattern, n, num / 65536.0)

    return Container(model=model, params=params, n=n, dictionary=seen, payload=payload)


def decompress(blob: "bytes | Container") -> bytes:
    """Invert :func:`compress` byte-exactly."""
    container = Container.from_bytes(blob) if isinstance(blob, (bytes, bytearray)) else blob
    if container.model == "two-part":
        from patternzip.twopart import twopart_decode

        reader = BitReader(container.payload.to_bytes(), container.payload.bit_length)
        pattern = twopart_decode(reader, container.n, container.params["eps_num"] / 65536.0)
    else:
        pattern = arith_decode(_fresh_model(container), container.payload, container.n)
    if max(pattern, default=0) > len(container.dictionary):
        raise CoderError("dictionary size mismatch")
    toks = [container.dictionary[j - 1] for j in pattern]
    return detokenize(toks, "words")
