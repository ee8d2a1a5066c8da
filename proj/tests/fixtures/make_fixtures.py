#!/usr/bin/env python3
"""Regenerate the golden reader inputs in this directory.

Written with struct/gzip only so the bytes do not depend on the C++ writers.
"""
import gzip
import math
import os
import struct

HERE = os.path.dirname(os.path.abspath(__file__))


def nifti(endian, dims, pixdim, datatype, bitpix, slope, inter, payload):
    e = endian
    hdr = bytearray(348)
    struct.pack_into(e + "i", hdr, 0, 348)
    dim = [len(dims)] + list(dims) + [1] * (7 - len(dims))
    struct.pack_into(e + "8h", hdr, 40, *dim)
    struct.pack_into(e + "h", hdr, 70, datatype)
    struct.pack_into(e + "h", hdr, 72, bitpix)
    pd = [1.0] + list(pixdim) + [0.0] * (7 - len(pixdim))
    struct.pack_into(e + "8f", hdr, 76, *pd)
    struct.pack_into(e + "f", hdr, 108, 352.0)
    struct.pack_into(e + "f", hdr, 112, slope)
    struct.pack_into(e + "f", hdr, 116, inter)
    hdr[344:348] = b"n+1\0"
    return bytes(hdr) + b"\0\0\0\0" + payload


def write(name, data):
    with open(os.path.join(HERE, name), "wb") as f:
        f.write(data)


# 3x2x2 int16, stored value (i - 6) * 10, scaled by 0.5 then +1.
vals = [(i - 6) * 10 for i in range(12)]
write("int16_scaled.nii",
      nifti("<", [3, 2, 2], [2.0, 2.0, 3.0], 4, 16, 0.5, 1.0, struct.pack("<12h", *vals)))

# 2x2x1x2 big-endian float32, value = 0.25 * i.
write("float32_be_4d.nii",
      nifti(">", [2, 2, 1, 2], [1.5, 1.5, 1.5, 1.0], 16, 32, 0.0, 0.0,
            struct.pack(">8f", *[0.25 * i for i in range(8)])))

# 4x1x1 uint8 gzip, values 0, 7, 128, 255. mtime pinned for stable bytes.
write("uint8.nii.gz",
      gzip.compress(nifti("<", [4, 1, 1], [1.0, 1.0, 1.0], 2, 8, 0.0, 0.0, bytes([0, 7, 128, 255])), mtime=0))

# Three streamlines with 2, 3 and 1 points.
lines = [
    [(0.0, 0.0, 0.0), (1.0, 2.0, 3.0)],
    [(-1.5, 0.5, 2.0), (-1.0, 1.0, 2.5), (-0.5, 1.5, 3.0)],
    [(10.0, 20.0, 30.0)],
]
header = "mrtrix tracks\ndatatype: Float32LE\ncount: 3\ntimestamp: 0\n"
# Offset is fixed so the header length does not depend on the digits.
offset = 128
header += "file: . %d\nEND\n" % offset
blob = header.encode().ljust(offset, b"\0")
nan = float("nan")
inf = float("inf")
for line in lines:
    for p in line:
        blob += struct.pack("<3f", *p)
    blob += struct.pack("<3f", nan, nan, nan)
blob += struct.pack("<3f", inf, inf, inf)
write("three.tck", blob)

# FSL-style gradients: one b0 plus three axis directions.
write("grad.bval", b"0 1000 1000 1000\n")
r = 1.0 / math.sqrt(2.0)
write("grad.bvec", ("0 1 0 %.17g\n0 0 1 %.17g\n0 0 0 0\n" % (r, r)).encode())
