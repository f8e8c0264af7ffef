#!/usr/bin/env python3
"""Regenerates data/codec_vectors.tsv from a from-scratch Python implementation
of the three integer codes. Kept separate from the C++ encoders so the shipped
vectors can catch regressions in either."""

import random
import sys


def vbyte(x):
    out = []
    while True:
        group = x & 0x7F
        x >>= 7
        if x:
            out.append(group | 0x80)
        else:
            out.append(group)
            return bytes(out).hex()


def gamma(x):
    b = bin(x)[2:]
    return "0" * (len(b) - 1) + b


def delta(x):
    b = bin(x)[2:]
    return gamma(len(b)) + b[1:]


def main():
    rng = random.Random(20240521)
    values = list(range(0, 33))
    values += [63, 64, 100, 127, 128, 255, 256, 300, 1000, 16383, 16384, 65535, 65536, 2**20 - 1, 2**20]
    values += [2**31 - 1, 2**31, 2**32, 2**40 + 12345, 2**56 - 1, 2**56, 2**63 - 1, 2**63, 2**64 - 1]
    values += sorted(rng.getrandbits(rng.randint(1, 64)) for _ in range(40))
    out = sys.stdout
    out.write("# value\tcodec\tencoding (hex bytes for vbyte, bitstring for gamma/delta)\n")
    for v in values:
        out.write(f"{v}\tvbyte\t{vbyte(v)}\n")
    for v in values:
        if v >= 1:
            out.write(f"{v}\tgamma\t{gamma(v)}\n")
    for v in values:
        if v >= 1:
            out.write(f"{v}\tdelta\t{delta(v)}\n")


if __name__ == "__main__":
    main()
