"""Fingerprint two files and let the referee decide whether they match.

Writes a random file, an exact copy and a copy with one flipped bit into a
temporary directory, then compares each pair with the 20 km configuration.
The codewords are encoded in blocks, so the same call handles files far
larger than memory.

Run with ``python3 demos/compare_two_files.py [megabytes]``.
"""

import shutil
import sys
import tempfile
from pathlib import Path

from qfingerprint import compare_files, random_bits
from qfingerprint import config as cfgmod


def main(megabytes=1.0):
    n = int(megabytes * 8_000_000)
    config = cfgmod.load("paper_20km")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        random_bits(7, n).write(tmp / "original")
        shutil.copy(tmp / "original", tmp / "copy")
        data = bytearray((tmp / "original").read_bytes())
        data[len(data) // 2] ^= 0x10
        (tmp / "edited").write_bytes(bytes(data))

        for other in ("copy", "edited"):
            verdict, summary, info = compare_files(tmp / "original", tmp / other, config.replace(scratch_dir=tmp))
            outcome = summary.outcomes[0]
            print(f"original vs {other:<6}  distance {outcome.distance:.4f}  "
                  f"counts {outcome.counts_d1:>3}  threshold {summary.threshold}  "
                  f"verdict {verdict.value}  gamma {info.gamma:.3f}")  # fmt: skip


if __name__ == "__main__":
    main(float(sys.argv[1]) if len(sys.argv) > 1 else 1.0)
