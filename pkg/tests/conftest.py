import math

from glassboard.geometry import Vec3
from glassboard.tracking import Pose


def mk_pose(role="head", x=0.0, y=0.0, z=0.0, t_us=0, device=None, orientation=(1.0, 0.0, 0.0, 0.0)):
    return Pose(
        device_id=device or f"dev-{role}",
        role=role,
        timestamp_us=t_us,
        position=Vec3(x, y, z),
        orientation=orientation,
    )


def bisect_plane_crossing(eye, p, iters=200):
    """Independent ray-plane oracle: find t with z(t) = 0 by bisection on the
    segment eye->p, then interpolate u, v. No closed-form division involved.
    """
    def z_at(t):
        return eye.z + t * (p.z - eye.z)

    lo, hi = 0.0, 1.0
    assert z_at(lo) * z_at(hi) <= 0, "oracle needs a sign change on the segment"
    for _ in range(iters):
        mid = (lo + hi) / 2
        if z_at(lo) * z_at(mid) <= 0:
            hi = mid
        else:
            lo = mid
    t = (lo + hi) / 2
    return (eye.x + t * (p.x - eye.x), eye.y + t * (p.y - eye.y))


def quat_about_y(angle_rad):
    return (math.cos(angle_rad / 2), 0.0, math.sin(angle_rad / 2), 0.0)
