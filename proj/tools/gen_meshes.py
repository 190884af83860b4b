#!/usr/bin/env python3
"""Generate the L-shape and disk meshes in data/meshes (.node/.ele, 1-based).

Force-based smoothing of a point cloud followed by a Delaunay triangulation,
after Persson and Strang's distmesh. Output is deterministic for a fixed seed.
"""
import argparse
import pathlib

import numpy as np
from scipy.spatial import Delaunay


def d_rect(p, x0, x1, y0, y1):
    return -np.minimum.reduce([-y0 + p[:, 1], y1 - p[:, 1], -x0 + p[:, 0], x1 - p[:, 0]])


def d_lshape(p):
    # (0,1)^2 minus [1/2,1) x (0,1/2]
    return np.maximum(d_rect(p, 0, 1, 0, 1), -d_rect(p, 0.5, 1, 0, 0.5))


def d_disk(p):
    return np.sqrt((p ** 2).sum(1)) - 1.0


def distmesh(fd, h0, bbox, fixed, seed=0, iters=400):
    rng = np.random.default_rng(seed)
    (x0, y0), (x1, y1) = bbox
    x, y = np.meshgrid(np.arange(x0, x1 + h0 / 2, h0),
                       np.arange(y0, y1 + h0 / 2, h0 * np.sqrt(3) / 2))
    x[1::2, :] += h0 / 2
    p = np.column_stack([x.ravel(), y.ravel()])
    p = p[fd(p) < -1e-3 * h0]
    p = np.vstack([fixed, p]) if len(fixed) else p
    nfix = len(fixed)
    geps = 1e-3 * h0
    deps = np.sqrt(np.finfo(float).eps) * h0
    for _ in range(iters):
        t = Delaunay(p).simplices
        c = p[t].mean(1)
        t = t[fd(c) < -geps]
        bars = np.unique(np.sort(np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [0, 2]]]), 1), axis=0)
        vec = p[bars[:, 0]] - p[bars[:, 1]]
        length = np.sqrt((vec ** 2).sum(1))
        l0 = 1.2 * np.sqrt((length ** 2).sum() / len(length))
        f = np.maximum(l0 - length, 0)
        fv = (f / length)[:, None] * vec
        force = np.zeros_like(p)
        np.add.at(force, bars[:, 0], fv)
        np.add.at(force, bars[:, 1], -fv)
        force[:nfix] = 0
        p = p + 0.2 * force
        d = fd(p)
        out = d > 0
        if out.any():
            q = p[out]
            gx = (fd(q + [deps, 0]) - d[out]) / deps
            gy = (fd(q + [0, deps]) - d[out]) / deps
            g2 = gx ** 2 + gy ** 2
            p[out] = q - np.column_stack([d[out] * gx / g2, d[out] * gy / g2])
        if np.max(np.sqrt(((0.2 * force[d < -geps]) ** 2).sum(1)), initial=0) < 1e-4 * h0:
            break
    t = Delaunay(p).simplices
    t = t[fd(p[t].mean(1)) < -geps]
    used = np.unique(t)
    remap = -np.ones(len(p), dtype=int)
    remap[used] = np.arange(len(used))
    return p[used], remap[t]


def boundary_markers(p, t):
    edges = np.sort(np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [0, 2]]]), 1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    marker = np.zeros(len(p), dtype=int)
    marker[uniq[counts == 1].ravel()] = 1
    return marker


def orient(p, t):
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    area = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    t = t.copy()
    flip = area < 0
    t[flip] = t[flip][:, [0, 2, 1]]
    return t


def snap_lshape(q):
    # nearest point on the L-shape boundary polygon
    x, y = q
    cands = [(0.0, min(max(y, 0), 1)), (1.0, min(max(y, 0.5), 1)), (0.5, min(max(y, 0), 0.5)),
             (min(max(x, 0), 0.5), 0.0), (min(max(x, 0.5), 1), 0.5), (min(max(x, 0), 1), 1.0)]
    return min(cands, key=lambda c: (c[0] - x) ** 2 + (c[1] - y) ** 2)


def snap_disk(q):
    r = np.hypot(q[0], q[1])
    return (q[0] / r, q[1] / r)


def write(stem, p, t, snap):
    t = orient(p, t)
    marker = boundary_markers(p, t)
    p = p.copy()
    for i in np.flatnonzero(marker):
        p[i] = snap(p[i])
    with open(f"{stem}.node", "w") as f:
        f.write(f"{len(p)} 2 0 1\n")
        for i, (x, y) in enumerate(p, 1):
            f.write(f"{i} {float(x)!r} {float(y)!r} {marker[i - 1]}\n")
    with open(f"{stem}.ele", "w") as f:
        f.write(f"{len(t)} 3 0\n")
        for i, tri in enumerate(t, 1):
            f.write(f"{i} {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}\n")


def max_edge(p, t):
    e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [0, 2]]])
    return np.sqrt(((p[e[:, 0]] - p[e[:, 1]]) ** 2).sum(1)).max()


# initial spacings tuned so the longest edge lands near 0.198/0.101/0.051 (L-shape)
# and 0.20/0.10/0.05 (disk)
LSHAPE_H0 = [0.13, 0.068, 0.036]
DISK_H0 = [0.142, 0.08, 0.04]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "meshes"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lcorners = np.array([[0, 0], [0.5, 0], [0.5, 0.5], [1, 0.5], [1, 1], [0, 1]], float)
    for level, h0 in enumerate(LSHAPE_H0, 1):
        p, t = distmesh(d_lshape, h0, ((0, 0), (1, 1)), lcorners)
        write(out / f"lshape_{level}", p, t, snap_lshape)
        print(f"lshape_{level}: nodes {len(p)} triangles {len(t)} h {max_edge(p, t):.3f}")
    for level, h0 in enumerate(DISK_H0, 1):
        p, t = distmesh(d_disk, h0, ((-1, -1), (1, 1)), np.empty((0, 2)))
        write(out / f"disk_{level}", p, t, snap_disk)
        print(f"disk_{level}: nodes {len(p)} triangles {len(t)} h {max_edge(p, t):.3f}")


if __name__ == "__main__":
    main()
