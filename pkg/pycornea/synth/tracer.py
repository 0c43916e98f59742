from typing import Tuple

import numpy as np

from .specs import SceneSpec

__all__ = ["trace"]

_EPS = 1e-9


def _hit_spheres(scene: SceneSpec, o: np.ndarray, d: np.ndarray, best_t, best_c):
    for s in scene.spheres:
        oc = o - np.asarray(s.center)
        b = np.sum(oc * d, axis=-1)
        c = np.sum(oc * oc, axis=-1) - s.radius**2
        disc = b * b - c
        ok = disc >= 0
        root = np.sqrt(np.where(ok, disc, 0.0))
        t0 = -b - root
        t1 = -b + root
        t = np.where(t0 > _EPS, t0, t1)
        ok &= t > _EPS
        closer = ok & (t < best_t)
        best_t[closer] = t[closer]
        best_c[closer] = s.color


def _hit_boxes(scene: SceneSpec, o: np.ndarray, d: np.ndarray, best_t, best_c):
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
    for b in scene.boxes:
        lo = np.asarray(b.lo)
        hi = np.asarray(b.hi)
        with np.errstate(invalid="ignore"):
            ta = (lo - o) * inv
            tb = (hi - o) * inv
        # nan appears only for rays lying exactly on a slab plane
        tmin = np.nanmax(np.minimum(ta, tb), axis=-1)
        tmax = np.nanmin(np.maximum(ta, tb), axis=-1)
        t = np.where(tmin > _EPS, tmin, tmax)
        ok = (tmax >= tmin) & (t > _EPS)
        closer = ok & (t < best_t)
        best_t[closer] = t[closer]
        best_c[closer] = b.color


def trace(
    scene: SceneSpec, origins: np.ndarray, directions: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    求光线与场景的最近交点并着色（平面漫反射加环境光，无阴影），未命中为黑色
    Nearest-hit ray cast against the scene with flat diffuse plus ambient shading (no shadows), black on a miss

    Args:
    - scene (SceneSpec): 场景。Scene.
    - origins (np.ndarray): (N, 3) 光线起点。(N, 3) ray origins.
    - directions (np.ndarray): (N, 3) 单位方向。(N, 3) unit directions.

    Returns:
    - hit (np.ndarray): (N,) 是否命中。(N,) whether each ray hit.
    - t (np.ndarray): (N,) 命中距离，未命中为 inf。(N,) hit distance, inf on a miss.
    - radiance (np.ndarray): (N, 3) 颜色。(N, 3) color.
    """
    o = np.asarray(origins, np.float64).reshape(-1, 3)
    d = np.asarray(directions, np.float64).reshape(-1, 3)
    best_t = np.full(len(o), np.inf)
    best_c = np.zeros((len(o), 3), np.float64)
    _hit_spheres(scene, o, d, best_t, best_c)
    _hit_boxes(scene, o, d, best_t, best_c)
    hit = np.isfinite(best_t)
    radiance = np.where(hit[:, None], np.clip(best_c + scene.ambient, 0.0, 1.0), 0.0)
    return hit, best_t, radiance
