"""
角膜几何模块：椭球截面、法线、求交、反射、弱透视深度与眼盘投影
Cornea geometry module: ellipsoid section, normals, intersection, reflection, weak-perspective depth and eye-disk projection
"""

from .model import (
    QUOTED_APEX_TO_BASE_MM,
    CameraIntrinsics,
    CorneaModel,
    CorneaObservation,
    Ray,
    ReflectedRay,
    ReflectedRays,
    RigidPose,
)
from .cornea import (
    depth_from_radius,
    eye_projection,
    eye_projection_many,
    intersect,
    intersect_many,
    reflect,
    reflect_many,
    surface_normal,
    surface_normals,
    surface_z,
)
from .camera import look_at, orbit_cameras, pixel_directions, pixel_grid_rays
from .placement import build_reflected_rays, limbus_center, place_cornea, pose_from_gaze
from .so3 import hat, rotation_between, so3_exp, so3_exp_derivatives

__all__ = [
    "QUOTED_APEX_TO_BASE_MM",
    "CameraIntrinsics",
    "CorneaModel",
    "CorneaObservation",
    "Ray",
    "ReflectedRay",
    "ReflectedRays",
    "RigidPose",
    "depth_from_radius",
    "eye_projection",
    "eye_projection_many",
    "intersect",
    "intersect_many",
    "reflect",
    "reflect_many",
    "surface_normal",
    "surface_normals",
    "surface_z",
    "look_at",
    "orbit_cameras",
    "pixel_directions",
    "pixel_grid_rays",
    "build_reflected_rays",
    "limbus_center",
    "place_cornea",
    "pose_from_gaze",
    "hat",
    "rotation_between",
    "so3_exp",
    "so3_exp_derivatives",
]
