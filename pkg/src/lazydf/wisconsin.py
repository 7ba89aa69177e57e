"""Seeded Wisconsin-style synthetic dataset generator.

Sixteen attributes per record: `unique2` is the sequential declared key,
`unique1` is a seeded random permutation of 0..n-1, the small integer
attributes are mods of unique1, the percentage attributes give exact
selectivities when their modulus divides n, and the three string
attributes encode unique1/unique2 (bijectively) or cycle through the four
prefix letters A, H, O, V.

Output is JSON-lines or CSV with a fixed field order; identical
(n, seed, format, string_length, pad_bytes) configurations produce
byte-identical files. Formatting of the hot loop runs in a compiled
kernel when available, with a pure-Python fallback selected at import.
"""

from __future__ import annotations

import csv
import hashlib
import importlib
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .errors import UsageError

FIELD_NAMES = (
    "unique1", "unique2", "unique3", "two", "four", "ten", "twenty",
    "onePercent", "tenPercent", "twentyPercent", "fiftyPercent",
    "evenOnePercent", "oddOnePercent", "stringu1", "stringu2", "string4",
)
STRING_PREFIXES = ("AAAA", "HHHH", "OOOO", "VVVV")
DEFAULT_STRING_LENGTH = 52
_ENCODED_DIGITS = 7
_BLOCK_SIZE = 65536


def _load_kernel():
    if not os.environ.get("LAZYDF_PURE_PYTHON"):
        try:
            return importlib.import_module("lazydf._rowgen")
        except ImportError:
            pass
    return importlib.import_module("lazydf._rowgen_py")


_kernel = _load_kernel()


def active_kernel() -> str:
    """Name of the row-formatting kernel in use: 'cython' or 'python'."""
    return _kernel.KERNEL_NAME


def kernel_variants() -> dict:
    """All importable kernels, keyed by name (for the backend benchmark)."""
    variants = {}
    for module in ("lazydf._rowgen", "lazydf._rowgen_py"):
        try:
            mod = importlib.import_module(module)
        except ImportError:
            continue
        variants[mod.KERNEL_NAME] = mod
    return variants


# --- field derivation ---------------------------------------------------------

def encode_unique_string(value: int, string_length: int = DEFAULT_STRING_LENGTH) -> str:
    """Bijective encoding: 7 base-26 capitals (most significant first,
    'A'-padded), then 'x' filler up to string_length."""
    if value < 0 or value >= 26 ** _ENCODED_DIGITS:
        raise UsageError(f"value {value} out of encodable range")
    if string_length < _ENCODED_DIGITS:
        raise UsageError(f"string length must be at least {_ENCODED_DIGITS}")
    chars = []
    v = value
    for _ in range(_ENCODED_DIGITS):
        chars.append(chr(65 + v % 26))
        v //= 26
    return "".join(reversed(chars)) + "x" * (string_length - _ENCODED_DIGITS)


def decode_unique_string(s: str) -> int:
    value = 0
    for ch in s[:_ENCODED_DIGITS]:
        digit = ord(ch) - 65
        if digit < 0 or digit > 25:
            raise UsageError(f"not an encoded string: {s[:_ENCODED_DIGITS]!r}")
        value = value * 26 + digit
    return value


def derive_record(unique1: int, unique2: int, n: Optional[int] = None,
                  string_length: int = DEFAULT_STRING_LENGTH) -> dict:
    """Pure derivation of all sixteen attributes from the two uniques."""
    if n is not None and not (0 <= unique1 < n and 0 <= unique2 < n):
        raise UsageError(
            f"unique values ({unique1}, {unique2}) out of range for n={n}"
        )
    if unique1 < 0 or unique2 < 0:
        raise UsageError("unique values must be non-negative")
    one_percent = unique1 % 100
    return {
        "unique1": unique1,
        "unique2": unique2,
        "unique3": unique1,
        "two": unique1 % 2,
        "four": unique1 % 4,
        "ten": unique1 % 10,
        "twenty": unique1 % 20,
        "onePercent": one_percent,
        "tenPercent": unique1 % 10,
        "twentyPercent": unique1 % 5,
        "fiftyPercent": unique1 % 2,
        "evenOnePercent": 2 * one_percent,
        "oddOnePercent": 2 * one_percent + 1,
        "stringu1": encode_unique_string(unique1, string_length),
        "stringu2": encode_unique_string(unique2, string_length),
        "string4": STRING_PREFIXES[unique2 % 4] + "x" * (string_length - 4),
    }


# --- permutations ---------------------------------------------------------------

def permutation(n: int, seed: int) -> np.ndarray:
    """Seeded uniform shuffle of 0..n-1; linear time, O(n) memory."""
    if n < 1:
        raise UsageError("permutation requires n >= 1")
    rng = np.random.Generator(np.random.PCG64(seed & (2 ** 64 - 1)))
    return rng.permutation(n).astype(np.int64)


def _feistel_value(i: int, n: int, half: int, key: bytes) -> int:
    mask = (1 << half) - 1
    v = i
    while True:
        left, right = v >> half, v & mask
        for rnd in range(4):
            digest = hashlib.blake2b(
                rnd.to_bytes(2, "little") + right.to_bytes(16, "little"),
                key=key, digest_size=8,
            ).digest()
            left, right = right, left ^ (int.from_bytes(digest, "little") & mask)
        v = (left << half) | right
        if v < n:
            return v


def keyed_permutation(n: int, seed: int) -> Iterator[int]:
    """Streaming bijection over 0..n-1 (cycle-walking Feistel network).

    Opt-in alternative to the array shuffle for cardinalities where an
    in-memory permutation is too large; different sequence than
    `permutation` for the same seed.
    """
    if n < 1:
        raise UsageError("permutation requires n >= 1")
    bits = max((n - 1).bit_length(), 2)
    half = (bits + 1) // 2
    key = (seed & (2 ** 64 - 1)).to_bytes(8, "little")
    for i in range(n):
        yield _feistel_value(i, n, half, key)


# --- generation --------------------------------------------------------------------

@dataclass
class GenConfig:
    records: int
    out: str
    seed: int = 1
    format: str = "json"
    string_length: int = DEFAULT_STRING_LENGTH
    pad_bytes: int = 0
    low_memory: bool = False

    def __post_init__(self):
        if self.records < 1:
            raise UsageError("records must be >= 1")
        if self.format not in ("json", "csv"):
            raise UsageError(f"unknown format {self.format!r}")
        if self.string_length < _ENCODED_DIGITS:
            raise UsageError(f"string length must be at least {_ENCODED_DIGITS}")
        if self.pad_bytes < 0:
            raise UsageError("pad bytes must be >= 0")


@dataclass
class GenSummary:
    records_written: int
    bytes_written: int
    kernel: str
    path: str


def _csv_header(pad_bytes: int) -> bytes:
    names = ",".join(FIELD_NAMES)
    if pad_bytes:
        names += ",padding"
    return (names + "\n").encode("ascii")


def _u1_blocks(config: GenConfig) -> Iterator[tuple[int, np.ndarray]]:
    n = config.records
    if config.low_memory:
        stream = keyed_permutation(n, config.seed)
        start = 0
        while start < n:
            size = min(_BLOCK_SIZE, n - start)
            block = np.fromiter(stream, dtype=np.int64, count=size)
            yield start, block
            start += size
    else:
        perm = permutation(n, config.seed)
        for start in range(0, n, _BLOCK_SIZE):
            yield start, np.ascontiguousarray(perm[start:start + _BLOCK_SIZE])


def generate(config: GenConfig) -> GenSummary:
    """Write the dataset file; deterministic under (records, seed, format,
    string_length, pad_bytes)."""
    out_path = Path(config.out)
    bytes_written = 0
    with open(out_path, "wb") as fh:
        if config.format == "csv":
            header = _csv_header(config.pad_bytes)
            fh.write(header)
            bytes_written += len(header)
        for start, block in _u1_blocks(config):
            data = _kernel.render_block(block, start, config.string_length,
                                        config.pad_bytes, config.format)
            fh.write(data)
            bytes_written += len(data)
    return GenSummary(config.records, bytes_written, active_kernel(), str(out_path))


# --- reading ------------------------------------------------------------------------

def _coerce(value: str):
    try:
        return int(value)
    except ValueError:
        return value


def read_records(path) -> list[dict]:
    """Load a generated JSON-lines or CSV file back into records."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() == ".csv":
        reader = csv.DictReader(io.StringIO(text))
        return [{k: _coerce(v) for k, v in row.items()} for row in reader]
    return [json.loads(line) for line in text.splitlines() if line.strip()]
