# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled row-formatting kernel.

Byte-for-byte equivalent to `_rowgen_py.render_block`; the equivalence is
pinned by tests and by the generator backend benchmark.
"""

from libc.stdio cimport snprintf
from libc.stdlib cimport free, malloc
from libc.string cimport memset, strlen

KERNEL_NAME = "cython"

cdef const char* _JSON_FMT = (
    b'{"unique1": %lld, "unique2": %lld, "unique3": %lld, "two": %lld, '
    b'"four": %lld, "ten": %lld, "twenty": %lld, "onePercent": %lld, '
    b'"tenPercent": %lld, "twentyPercent": %lld, "fiftyPercent": %lld, '
    b'"evenOnePercent": %lld, "oddOnePercent": %lld, "stringu1": "%s", '
    b'"stringu2": "%s", "string4": "%s"'
)
cdef const char* _CSV_FMT = (
    b'%lld,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%lld,'
    b'%s,%s,%s'
)
cdef const char* _PREFIX_LETTERS = b"AHOV"


cdef inline void _encode7(long long value, char* out) noexcept:
    cdef int i
    for i in range(6, -1, -1):
        out[i] = 65 + <int>(value % 26)
        value //= 26


def render_block(long long[::1] u1_values, long long start, int string_length,
                 int pad_bytes, str fmt):
    """Format records for unique2 ordinals start..start+len(u1_values)-1."""
    cdef bint as_json
    if fmt == "json":
        as_json = True
    elif fmt == "csv":
        as_json = False
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if string_length < 7:
        raise ValueError("string length must be at least 7")

    cdef Py_ssize_t count = u1_values.shape[0]
    cdef size_t record_cap = (
        260 + 13 * 20 + 3 * <size_t>string_length + <size_t>pad_bytes + 64
    )
    cdef size_t cap = record_cap * <size_t>count + 1
    cdef char* buf = <char*>malloc(cap)
    cdef char* s1 = <char*>malloc(string_length + 1)
    cdef char* s2 = <char*>malloc(string_length + 1)
    cdef char* s4 = <char*>malloc(string_length + 1)
    cdef char* pad = <char*>malloc(pad_bytes + 1)
    if buf == NULL or s1 == NULL or s2 == NULL or s4 == NULL or pad == NULL:
        free(buf); free(s1); free(s2); free(s4); free(pad)
        raise MemoryError()

    memset(s1, b'x', string_length); s1[string_length] = 0
    memset(s2, b'x', string_length); s2[string_length] = 0
    memset(s4, b'x', string_length); s4[string_length] = 0
    memset(pad, b'x', pad_bytes); pad[pad_bytes] = 0

    cdef size_t pos = 0
    cdef Py_ssize_t i
    cdef long long u1, u2, one_percent
    cdef char letter
    cdef int j, written

    try:
        for i in range(count):
            u1 = u1_values[i]
            u2 = start + i
            one_percent = u1 % 100
            _encode7(u1, s1)
            _encode7(u2, s2)
            letter = _PREFIX_LETTERS[<int>(u2 % 4)]
            for j in range(4):
                s4[j] = letter

            written = snprintf(
                buf + pos, cap - pos,
                _JSON_FMT if as_json else _CSV_FMT,
                u1, u2, u1,
                u1 % 2, u1 % 4, u1 % 10, u1 % 20,
                one_percent, u1 % 10, u1 % 5, u1 % 2,
                2 * one_percent, 2 * one_percent + 1,
                s1, s2, s4,
            )
            if written < 0:
                raise OSError("snprintf failed")
            pos += <size_t>written

            if as_json:
                if pad_bytes:
                    written = snprintf(buf + pos, cap - pos,
                                       b', "padding": "%s"}\n', pad)
                else:
                    written = snprintf(buf + pos, cap - pos, b"}\n")
            else:
                if pad_bytes:
                    written = snprintf(buf + pos, cap - pos, b",%s\n", pad)
                else:
                    written = snprintf(buf + pos, cap - pos, b"\n")
            if written < 0:
                raise OSError("snprintf failed")
            pos += <size_t>written

        return buf[:pos]
    finally:
        free(buf); free(s1); free(s2); free(s4); free(pad)
