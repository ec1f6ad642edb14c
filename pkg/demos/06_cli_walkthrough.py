"""
The command line tool
=====================

The same pipeline through ``grayetc``: encrypt, compress with a G-table,
pass through a social network emulation, decrypt.  Every command also
writes ``<out>.manifest.json`` with digests of what it read and wrote.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

from grayetc import KeySet
from grayetc.netpbm import write_netpbm

from _images import NAMES, load


def grayetc(*args):
    cmd = [sys.executable, "-m", "grayetc", *map(str, args)]
    print("$ grayetc", " ".join(map(str, args)))
    r = subprocess.run(cmd, capture_output=True, text=True)
    if r.stdout:
        print(r.stdout, end="")
    if r.returncode:
        print(r.stderr, end="")
    print(f"  (exit {r.returncode})")
    return r.returncode


work = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="grayetc-"))
(work / "corpus").mkdir(parents=True, exist_ok=True)
for name in NAMES:
    write_netpbm(work / "corpus" / f"{name}.ppm", load(name, (256, 192)))
write_netpbm(work / "in.ppm", load("astronaut"))
(work / "keys.txt").write_text(KeySet.generate().to_text())
k = ("--key-file", work / "keys.txt")

grayetc("gtable", "derive", "--corpus", work / "corpus", "--out", work / "g.txt")
grayetc("encrypt", "--in", work / "in.ppm", "--out", work / "c.pgm", "--block", 8, *k)
grayetc("compress", "--in", work / "c.pgm", "--out", work / "c.jpg", "--qf", 90, "--gtable", work / "g.txt")
grayetc("sns", "--profile", "facebook", "--in", work / "c.jpg", "--out", work / "c_fb.jpg")
grayetc("decrypt", "--in", work / "c_fb.jpg", "--meta", work / "c.json", "--out", work / "back.ppm", *k)
grayetc("rd-sweep", "--pipeline", "proposed", "--corpus", work / "corpus", "--qf", "70:100:10",
        "--gtable", work / "g.txt", "--out", work / "rd.csv", *k)
print((work / "rd.csv").read_text())

# %%
# Usage problems exit with 2, unreadable inputs with 3.
grayetc("encrypt", "--in", work / "in.ppm", "--out", work / "x.pgm", "--k1", "00", "--k2", "00", "--k3", "00")
grayetc("decrypt", "--in", work / "in.ppm", "--out", work / "x.ppm", *k)
print("files in", work)
