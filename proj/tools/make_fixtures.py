#!/usr/bin/env python3
"""Regenerates the synthetic data files under data/.

The constellations are Walker-style shells written as checksummed TLEs with
epoch 2025-001.0; the population grid is a sum of Gaussian blobs on 1 degree
cells. Output is deterministic.
"""
import math
import os

MU = 398600.4418
RE = 6371.0
HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "data")


def checksum(line):
    s = 0
    for ch in line[:68]:
        if ch.isdigit():
            s += int(ch)
        elif ch == "-":
            s += 1
    return str(s % 10)


def tle(name, satnum, inc, raan, ecc, argp, ma, alt_km):
    a = RE + alt_km
    n = math.sqrt(MU / a**3) * 86400.0 / (2 * math.pi)
    l1 = "1 %05dU 25001A   25001.00000000  .00000000  00000-0  00000-0 0  999" % satnum
    l2 = "2 %05d %8.4f %8.4f %07d %8.4f %8.4f %11.8f%5d" % (
        satnum, inc, raan % 360.0, int(round(ecc * 1e7)), argp, ma % 360.0, n, 1)
    l1 = l1[:68].ljust(68)
    l2 = l2[:68].ljust(68)
    return [name, l1 + checksum(l1), l2 + checksum(l2)]


def shell(prefix, first_num, planes, per_plane, inc, alt, raan_step, phase, cluster=None):
    """Satellites ordered plane by plane. With cluster=(p, s) the first p*s
    entries are s consecutive satellites from p adjacent planes."""
    sats = []
    for p in range(planes):
        for s in range(per_plane):
            raan = p * raan_step
            ma = s * 360.0 / per_plane + p * phase
            sats.append((p, s, raan, ma))
    if cluster:
        cp, cs = cluster
        head = [x for x in sats if x[0] < cp and x[1] < cs]
        tail = [x for x in sats if not (x[0] < cp and x[1] < cs)]
        sats = head + tail
    lines = []
    for i, (p, s, raan, ma) in enumerate(sats):
        lines += tle("%s-%02d%02d" % (prefix, p, s), first_num + i, inc, raan, 0.0001, 0.0, ma, alt)
    return lines


def write(name, lines):
    with open(os.path.join(DATA, name), "w") as f:
        f.write("\n".join(lines) + "\n")


BLOBS = [  # lat, lon, sigma_deg, weight
    (35.0, 115.0, 6.0, 10.0), (25.0, 80.0, 6.0, 10.0), (35.5, 139.0, 2.5, 3.0),
    (50.0, 10.0, 7.0, 6.0), (40.0, -80.0, 6.0, 4.0), (35.0, -115.0, 4.0, 2.0),
    (-23.0, -46.0, 5.0, 2.5), (19.0, -99.0, 4.0, 2.0), (6.0, 3.0, 5.0, 3.0),
    (30.0, 31.0, 3.0, 2.0), (-6.0, 107.0, 4.0, 3.0), (14.0, 121.0, 3.0, 1.5),
    (55.0, 38.0, 4.0, 1.5), (-34.0, 151.0, 2.0, 0.5), (4.0, -74.0, 4.0, 1.0),
]


def population():
    n_lat, n_lon = 180, 360
    rows = []
    total = 0.0
    for r in range(n_lat):
        lat = -90.0 + (r + 0.5)
        row = []
        for c in range(n_lon):
            lon = -180.0 + (c + 0.5)
            v = 0.02 * math.cos(math.radians(lat))
            for blat, blon, sig, w in BLOBS:
                dlon = (lon - blon + 180.0) % 360.0 - 180.0
                v += w * math.exp(-((lat - blat) ** 2 + (dlon * math.cos(math.radians(blat))) ** 2) / (2 * sig * sig))
            row.append(v)
            total += v
        rows.append(row)
    out = ["# synthetic population density, rows south to north, 1 degree cells",
           "# normalized to a total of 1e4",
           "%d %d -90 90 -180 180" % (n_lat, n_lon)]
    for row in rows:
        out.append(" ".join("%.4g" % (v * 1e4 / total) for v in row))
    with open(os.path.join(DATA, "population_1deg.txt"), "w") as f:
        f.write("\n".join(out) + "\n")


def main():
    os.makedirs(DATA, exist_ok=True)
    write("starlink_like.tle", shell("STARLINK-LIKE", 70001, 18, 22, 53.0, 550.0, 5.0, 2.0, cluster=(2, 5)))
    write("iridium_like.tle", shell("IRIDIUM-LIKE", 71001, 6, 11, 86.4, 780.0, 31.6, 16.4, cluster=(2, 5)))
    write("oneweb_like.tle", shell("ONEWEB-LIKE", 72001, 12, 20, 87.9, 1200.0, 15.0, 9.0, cluster=(2, 5)))
    population()


if __name__ == "__main__":
    main()
