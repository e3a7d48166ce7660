from .box import OrientedBox3D, boxes_to_array, bev_corners, to_local, normalize_yaw
from .clipping import ConvexPolygon2D, clip_footprints, intersection_vertices
from .iou import bev_intersection_area, iou_bev, iou_3d, aligned_iou, pairwise_iou, vertical_overlap_ratio, \
    differentiable_iou, differentiable_bev_intersection
from .nms import rotated_nms

__all__ = [
    'OrientedBox3D', 'boxes_to_array', 'bev_corners', 'to_local', 'normalize_yaw',  # box.py

    'ConvexPolygon2D', 'clip_footprints', 'intersection_vertices',  # clipping.py

    'bev_intersection_area', 'iou_bev', 'iou_3d', 'aligned_iou', 'pairwise_iou', 'vertical_overlap_ratio',
    'differentiable_iou', 'differentiable_bev_intersection',  # iou.py

    'rotated_nms',  # nms.py
]
