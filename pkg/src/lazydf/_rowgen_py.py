"""Pure-Python row-formatting kernel.

Reference implementation of the record layout; the compiled kernel in
`_rowgen.pyx` must produce byte-identical output. Selected automatically
at import by `lazydf.wisconsin` when the extension is unavailable (or when
LAZYDF_PURE_PYTHON is set).
"""

from __future__ import annotations

KERNEL_NAME = "python"

_JSON_HEAD = (
    '{{"unique1": {0}, "unique2": {1}, "unique3": {2}, "two": {3}, '
    '"four": {4}, "ten": {5}, "twenty": {6}, "onePercent": {7}, '
    '"tenPercent": {8}, "twentyPercent": {9}, "fiftyPercent": {10}, '
    '"evenOnePercent": {11}, "oddOnePercent": {12}, "stringu1": "{13}", '
    '"stringu2": "{14}", "string4": "{15}"'
)
_PREFIXES = ("AAAA", "HHHH", "OOOO", "VVVV")


def _encode7(value: int) -> str:
    chars = []
    for _ in range(7):
        chars.append(chr(65 + value % 26))
        value //= 26
    return "".join(reversed(chars))


def render_block(u1_values, start: int, string_length: int, pad_bytes: int,
                 fmt: str) -> bytes:
    """Format records for unique2 ordinals start..start+len(u1_values)-1."""
    if hasattr(u1_values, "tolist"):
        u1_values = u1_values.tolist()
    fill_u = "x" * (string_length - 7)
    fill_4 = "x" * (string_length - 4)
    pad = "x" * pad_bytes

    lines = []
    if fmt == "json":
        if pad_bytes:
            template = _JSON_HEAD + ', "padding": "' + pad + '"}\n'
        else:
            template = _JSON_HEAD + "}\n"
    elif fmt == "csv":
        template = ",".join("{%d}" % i for i in range(16))
        if pad_bytes:
            template += "," + pad
        template += "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")

    for offset, u1 in enumerate(u1_values):
        u2 = start + offset
        one_percent = u1 % 100
        lines.append(template.format(
            u1, u2, u1,
            u1 % 2, u1 % 4, u1 % 10, u1 % 20,
            one_percent, u1 % 10, u1 % 5, u1 % 2,
            2 * one_percent, 2 * one_percent + 1,
            _encode7(u1) + fill_u,
            _encode7(u2) + fill_u,
            _PREFIXES[u2 % 4] + fill_4,
        ))
    return "".join(lines).encode("ascii")
