"""Seeded synthetic scenes: labeled boxes resting exactly on a known plane.

Scenes are built so every sampled object is geometrically benign (bottom on
the plane, top safely below the camera's horizontal plane); that makes them
usable as exactness fixtures where every depth estimator must recover the
true depth to within floating-point error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import CameraIntrinsics, Point3D, project
from .ground_plane import GroundPlane
from .kitti_io import Object3D

#: Intrinsics in the ballpark of a forward road camera (image ~1242x375).
DEFAULT_INTRINSICS = CameraIntrinsics(f_x=721.5377, f_y=721.5377,
                                      c_u=609.5593, c_v=172.854)


@dataclass(frozen=True)
class Scene:
    intrinsics: CameraIntrinsics
    plane: GroundPlane
    objects: tuple[Object3D, ...]


def random_plane(rng: np.random.Generator, slope_max_deg: float = 5.0,
                 cam_height: float = 1.65) -> GroundPlane:
    """Ground plane with a uniformly random tilt direction, tilt angle up to
    slope_max_deg, passing cam_height meters below the camera at the origin."""
    direction = rng.uniform(0.0, 2.0 * math.pi)
    gradient = math.tan(rng.uniform(0.0, math.radians(slope_max_deg)))
    p = gradient * math.cos(direction)
    q = gradient * math.sin(direction)
    return GroundPlane.from_heightfield(p, q, cam_height)


def make_scene(n_objects: int, seed: int, *,
               intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS,
               slope_max_deg: float = 5.0,
               depth_range: tuple[float, float] = (5.0, 60.0),
               height_range: tuple[float, float] = (1.0, 2.0),
               cam_height: float = 1.65,
               min_clearance: float = 0.15) -> Scene:
    """Sample boxes standing on a random sloped plane.

    Rejection sampling keeps every object's top at least min_clearance
    meters below the camera's horizontal plane (ground elevation minus box
    height stays positive), so no estimator hits a singularity guard.
    """
    rng = np.random.default_rng(seed)
    plane = random_plane(rng, slope_max_deg, cam_height)

    objects = []
    while len(objects) < n_objects:
        z = rng.uniform(*depth_range)
        x = rng.uniform(-0.3 * z, 0.3 * z)
        h = rng.uniform(*height_range)
        y = plane.height_at(x, z)
        if y - h < min_clearance:
            continue
        w = rng.uniform(1.4, 2.0)
        l = rng.uniform(3.0, 4.8)
        theta = rng.uniform(-math.pi, math.pi)
        alpha = math.remainder(theta - math.atan2(x, z), 2.0 * math.pi)
        bbox = _amodal_bbox(x, y, z, h, w, l, theta, intrinsics)
        objects.append(Object3D(
            class_name="Car", truncation=0.0, occlusion=0, alpha=alpha,
            bbox2d=bbox, h=h, w=w, l=l, x=x, y=y, z=z, theta=theta,
        ))
    return Scene(intrinsics=intrinsics, plane=plane, objects=tuple(objects))


def _amodal_bbox(x, y, z, h, w, l, theta, k) -> tuple[float, float, float, float]:
    half_l, half_w = l / 2.0, w / 2.0
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    us, vs = [], []
    for dx, dz in ((half_l, half_w), (half_l, -half_w),
                   (-half_l, -half_w), (-half_l, half_w)):
        cx = x + dx * cos_t + dz * sin_t
        cz = z - dx * sin_t + dz * cos_t
        for cy in (y, y - h):
            px = project(Point3D(cx, cy, cz), k)
            us.append(px.u)
            vs.append(px.v)
    return (min(us), min(vs), max(us), max(vs))
