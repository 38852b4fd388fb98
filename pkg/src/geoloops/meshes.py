"""Generators for the bundled fixture meshes.

The files under ``geoloops/data`` were produced by these functions; they are
kept here so the fixtures can be regenerated or built at other resolutions.
"""

from __future__ import annotations

import numpy as np

__all__ = ["icosphere", "ellipsoid", "flat_torus"]


def _icosahedron():
    t = (1.0 + 5.0**0.5) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    v = np.array(verts, dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True), np.array(faces, dtype=np.int64)


def icosphere(subdivisions: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Unit sphere by repeated 4-to-1 subdivision of the icosahedron."""
    verts, faces = _icosahedron()
    verts = list(map(tuple, verts))
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def mid(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = (np.asarray(verts[i]) + np.asarray(verts[j])) / 2.0
                verts.append(tuple(m / np.linalg.norm(m)))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = np.array(new, dtype=np.int64)
    return np.array(verts, dtype=float), np.asarray(faces, dtype=np.int64)


def ellipsoid(axes=(1.0, 1.0, 1.3), subdivisions: int = 4):
    verts, faces = icosphere(subdivisions)
    return verts * np.asarray(axes, dtype=float), faces


def flat_torus(nx: int = 16, ny: int = 16, width: float = 1.0, height: float = 1.0):
    """Square flat torus; returns positions, faces and intrinsic edge lengths.

    The positions are the grid in the plane and are only meaningful for
    plotting: wrap-around edges get their length from the returned mapping.
    """
    hx, hy = width / nx, height / ny
    idx = lambda i, j: (i % nx) + nx * (j % ny)  # noqa: E731
    verts = np.array([(i * hx, j * hy, 0.0) for j in range(ny) for i in range(nx)])
    faces, lengths = [], {}
    diag = float(np.hypot(hx, hy))
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            faces += [(a, b, c), (a, c, d)]
            for (u, w), ln in (((a, b), hx), ((b, c), hy), ((a, c), diag), ((c, d), hx), ((d, a), hy)):
                lengths[(min(u, w), max(u, w))] = ln
    return verts, np.array(faces, dtype=np.int64), lengths


FIXTURES = {
    "sphere_fine": "sphere_fine.off",
    "sphere_coarse": "sphere_coarse.off",
    "ellipsoid": "ellipsoid.off",
    "torus": "torus.off",
}


def fixture_path(name: str):
    from importlib.resources import files

    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    return files("geoloops") / "data" / FIXTURES[name]


_CACHE: dict = {}


def load_fixture(name: str, **kw):
    """Load a bundled mesh as a Surface (cached per name and options)."""
    from .surface import load_surface

    key = (name, tuple(sorted(kw.items())))
    if key not in _CACHE:
        _CACHE[key] = load_surface(fixture_path(name), **kw)
    return _CACHE[key]


def write_fixtures(directory) -> None:
    import json
    from pathlib import Path

    from .surface import write_off

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    write_off(out / "sphere_fine.off", *icosphere(5))
    write_off(out / "sphere_coarse.off", *icosphere(4))
    write_off(out / "ellipsoid.off", *ellipsoid((1.0, 1.0, 1.3), 4))
    verts, faces, lengths = flat_torus(16, 16)
    write_off(out / "torus.off", verts, faces)
    rows = [[i, j, x] for (i, j), x in sorted(lengths.items())]
    (out / "torus.json").write_text(json.dumps({"edge_lengths": rows}) + "\n")


if __name__ == "__main__":  # pragma: no cover
    import sys

    write_fixtures(sys.argv[1] if len(sys.argv) > 1 else "src/geoloops/data")
