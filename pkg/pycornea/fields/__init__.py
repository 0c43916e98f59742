"""
可学习场模块：三维场景辐射场、二维虹膜纹理场与沿反射光线的体渲染
Learnable fields module: 3D scene radiance field, 2D iris texture field and volume rendering along reflected rays
"""

from .grid import GridTape, bilinear, point_gradient, scatter_add, trilinear
from .scene import SceneField, SceneTape, eval_scene, sigmoid, softplus
from .texture import TextureField, TextureTape, eval_texture
from .render import (
    RenderResult,
    RenderTape,
    Sampling,
    backward,
    composite,
    render_direct,
    render_rays,
    stratified_samples,
    volume_render,
)

__all__ = [
    "GridTape",
    "bilinear",
    "point_gradient",
    "scatter_add",
    "trilinear",
    "SceneField",
    "SceneTape",
    "eval_scene",
    "sigmoid",
    "softplus",
    "TextureField",
    "TextureTape",
    "eval_texture",
    "RenderResult",
    "RenderTape",
    "Sampling",
    "backward",
    "composite",
    "render_direct",
    "render_rays",
    "stratified_samples",
    "volume_render",
]
