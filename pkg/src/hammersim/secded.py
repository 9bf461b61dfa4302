"""SECDED (72,64) codec: extended Hamming code over 64-bit words.

Codeword layout (bit-exact, so test vectors are portable):
  - Codeword bit 0 is the overall (even) parity over all 72 bits.
  - Codeword bits 1..71 follow the classic Hamming numbering: bits at
    power-of-two positions (1, 2, 4, 8, 16, 32, 64) are check bits; the
    remaining 64 positions carry data bits, LSB of the data word in the
    lowest data position, ascending.
  - Check bit at position 2^j makes the XOR over all positions whose index
    has bit j set equal to zero.

Decoding: syndrome = XOR of the indices of all set bits in positions 1..71;
overall parity distinguishes odd from even error weights. Any single-bit
error is corrected, any double-bit error is detected; behavior beyond two
flips is unspecified by the code (it may miscorrect or report clean).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

CODEWORD_BITS = 72
DATA_BITS = 64

_CHECK_POSITIONS = (1, 2, 4, 8, 16, 32, 64)
_DATA_POSITIONS = tuple(p for p in range(1, CODEWORD_BITS)
                        if p not in _CHECK_POSITIONS)
assert len(_DATA_POSITIONS) == DATA_BITS

CLEAN = "clean"
CORRECTED = "corrected"
UNCORRECTABLE = "uncorrectable"


@dataclass(frozen=True)
class DecodeResult:
    status: str  # CLEAN, CORRECTED, or UNCORRECTABLE
    word: Optional[int]  # decoded 64-bit word; None when uncorrectable
    corrected_bit: Optional[int] = None  # codeword bit position fixed


def _syndrome(codeword: int) -> int:
    syn = 0
    bits = codeword >> 1
    pos = 1
    while bits:
        if bits & 1:
            syn ^= pos
        bits >>= 1
        pos += 1
    return syn


def _extract(codeword: int) -> int:
    word = 0
    for i, pos in enumerate(_DATA_POSITIONS):
        word |= ((codeword >> pos) & 1) << i
    return word


def secded_encode(word: int) -> int:
    """Encode a 64-bit word into a 72-bit codeword."""
    if not 0 <= word < (1 << DATA_BITS):
        raise ValueError("word must fit in 64 bits")
    cw = 0
    for i, pos in enumerate(_DATA_POSITIONS):
        cw |= ((word >> i) & 1) << pos
    syn = _syndrome(cw)
    for pos in _CHECK_POSITIONS:
        if syn & pos:
            cw |= 1 << pos
    # overall parity over all 72 bits, made even
    cw |= cw.bit_count() & 1
    return cw


def secded_decode(codeword: int) -> DecodeResult:
    """Decode a 72-bit codeword; correct 1 flip, detect 2 flips."""
    if not 0 <= codeword < (1 << CODEWORD_BITS):
        raise ValueError("codeword must fit in 72 bits")
    syn = _syndrome(codeword)
    parity_odd = codeword.bit_count() & 1
    if syn == 0 and not parity_odd:
        return DecodeResult(CLEAN, _extract(codeword))
    if parity_odd:
        # odd error weight; assume a single flip
        if syn == 0:
            # the overall parity bit itself flipped
            return DecodeResult(CORRECTED, _extract(codeword ^ 1), corrected_bit=0)
        if syn < CODEWORD_BITS:
            fixed = codeword ^ (1 << syn)
            return DecodeResult(CORRECTED, _extract(fixed), corrected_bit=syn)
        return DecodeResult(UNCORRECTABLE, None)
    # even parity with nonzero syndrome: even (>= 2) error weight
    return DecodeResult(UNCORRECTABLE, None)


# -- cache-line helpers -------------------------------------------------------

WORDS_PER_LINE = 8  # 512 data bits


def encode_line(words: list[int]) -> list[int]:
    if len(words) != WORDS_PER_LINE:
        raise ValueError(f"a cache line holds {WORDS_PER_LINE} words")
    return [secded_encode(w) for w in words]


def decode_line(codewords: list[int]) -> list[DecodeResult]:
    if len(codewords) != WORDS_PER_LINE:
        raise ValueError(f"a cache line holds {WORDS_PER_LINE} words")
    return [secded_decode(cw) for cw in codewords]


def secded_scrub(flips) -> tuple[list, list]:
    """Post-hoc ECC filter over an error report's flips.

    Cells are grouped into 64-bit words by (bank, row, col // 64); words with
    exactly one flipped bit are corrected by the read path, words with two or
    more flipped bits defeat SECDED and survive. Check-bit storage is modeled
    as flip-free. Returns (corrected, surviving).
    """
    groups: dict[tuple[int, int, int], list] = {}
    for f in flips:
        groups.setdefault((f.bank, f.row, f.col // DATA_BITS), []).append(f)
    corrected, surviving = [], []
    for members in groups.values():
        if len(members) == 1:
            corrected.extend(members)
        else:
            surviving.extend(members)
    return corrected, surviving
