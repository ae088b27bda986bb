from .clough_tocher import OUTSIDE, CtGeometry, CtInterpolant, ct_eval, ct_fit
from .delaunay import Triangulation, delaunay
from .io import decode_frames, encode_frames, load_frames, save_frames
from .projection import (
    ProjectedMontage,
    aep_points,
    orthographic_points,
    project,
    project_aep,
    project_orthographic,
)
from .render import (
    MESH_SIZE,
    Renderer,
    Standardizer,
    make_movie,
    make_movies,
    mesh_coordinates,
    render_frame,
    render_frames,
)
