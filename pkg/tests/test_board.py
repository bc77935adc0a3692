import random

import pytest

from glassboard.board import (
    Board,
    BoundaryHit,
    CONSPICUOUS,
    INCONSPICUOUS,
    SlideDeck,
    SlideItem,
    StudentInfo,
    compose_display_lists,
    navigate,
)
from glassboard.errors import NotInWritingMode, RolePlayInactive
from glassboard.geometry import (
    BACK,
    FRONT,
    ScreenGeometry,
    ScreenPoint,
    Vec3,
    Viewer,
)
from glassboard.tracking import AvatarPose

from conftest import bisect_plane_crossing, mk_pose

SCREEN = ScreenGeometry()
VIEWERS = {FRONT: Viewer(Vec3(0, 1.2, 5.0), FRONT), BACK: Viewer(Vec3(0, 1.6, -2.0), BACK)}


def empty_deck():
    return SlideDeck(slides=((),))


def deck_of(n):
    return SlideDeck(slides=tuple(() for _ in range(n)))


def make_board(deck=None):
    return Board(SCREEN, deck or empty_deck())


def _avatar(dy=0.0):
    joints = {name: Vec3(0.1, 1.0 + dy, -1.0) for name in AvatarPose.JOINT_NAMES}
    return AvatarPose(joints)


# -- navigation ------------------------------------------------------------------

def test_navigate_clamps_at_start():
    deck = deck_of(10)
    after, hit = navigate(deck, "previous")
    assert after.current_index == 0
    assert hit == BoundaryHit(0, "previous")


def test_navigate_increments():
    deck = SlideDeck(slides=tuple(() for _ in range(10)), current_index=3)
    after, hit = navigate(deck, "next")
    assert after.current_index == 4 and hit is None


def test_navigate_clamps_at_end():
    deck = SlideDeck(slides=tuple(() for _ in range(10)), current_index=9)
    after, hit = navigate(deck, "next")
    assert after.current_index == 9
    assert hit == BoundaryHit(9, "next")


# -- writing ------------------------------------------------------------------------

def test_stroke_point_drops_orthogonally():
    board = make_board()
    board.set_writing("pen", True, side=BACK)
    board.add_stroke_point(mk_pose(role="right_hand", x=0.5, y=1.0, z=-0.3, device="pen"))
    stroke = board.active_strokes["pen"]
    assert stroke.points[-1].u == 0.5
    assert stroke.points[-1].v == 1.0


def test_duplicate_consecutive_points_discarded():
    board = make_board()
    board.set_writing("pen", True, side=BACK)
    board.add_stroke_point(mk_pose(role="right_hand", x=0.5, y=1.0, z=-0.3, device="pen"))
    board.add_stroke_point(mk_pose(role="right_hand", x=0.5, y=1.0, z=-0.25, device="pen"))
    assert len(board.active_strokes["pen"].points) == 1


def test_zigzag_replays_in_order():
    board = make_board()
    board.set_writing("pen", True, side=BACK)
    pts = [(0.0, 0.0), (0.1, 0.2), (0.2, 0.0)]
    for x, y in pts:
        board.add_stroke_point(mk_pose(role="right_hand", x=x, y=y, z=-0.2, device="pen"))
    got = [(p.u, p.v) for p in board.active_strokes["pen"].points]
    assert got == pts


def test_writing_requires_mode():
    board = make_board()
    with pytest.raises(NotInWritingMode):
        board.add_stroke_point(mk_pose(role="right_hand", device="pen"))


# -- composition ----------------------------------------------------------------------

def test_empty_board_composes_empty_matching_lists():
    board = make_board()
    lists = compose_display_lists(board, VIEWERS, frame_id=7)
    assert lists[FRONT].primitives == ()
    assert lists[BACK].primitives == ()
    assert lists[FRONT].frame_id == lists[BACK].frame_id == 7


def test_back_stroke_mirrored_and_recolored_for_front():
    board = make_board()
    board.set_writing("pen", True, side=BACK)
    board.add_stroke_point(mk_pose(role="right_hand", x=0.5, y=0.2, z=-0.2, device="pen"))
    board.add_stroke_point(mk_pose(role="right_hand", x=0.5, y=0.8, z=-0.2, device="pen"))
    lists = compose_display_lists(board, VIEWERS, frame_id=1)
    back_prim = [p for p in lists[BACK].primitives if p["kind"] == "polyline"][0]
    front_prim = [p for p in lists[FRONT].primitives if p["kind"] == "polyline"][0]
    assert back_prim["points"][0][0] == 0.5
    assert front_prim["points"][0][0] == -0.5
    assert back_prim["color"] == list(INCONSPICUOUS)
    assert front_prim["color"] == list(CONSPICUOUS)


def test_double_mirror_identity_bit_exact():
    board = make_board()
    board.set_writing("pen", True, side=BACK)
    rng = random.Random(2)
    for _ in range(20):
        board.add_stroke_point(mk_pose(
            role="right_hand", x=rng.uniform(-1.9, 1.9), y=rng.uniform(-1.4, 1.4),
            z=-0.2, device="pen"))
    lists = compose_display_lists(board, VIEWERS, frame_id=1)
    back_pts = [p["points"] for p in lists[BACK].primitives if p["kind"] == "polyline"]
    front_pts = [p["points"] for p in lists[FRONT].primitives if p["kind"] == "polyline"]
    remirrored = [[[-u, v] for u, v in run] for run in front_pts]
    assert remirrored == back_pts


def test_slide_item_projected_through_front_viewer():
    # same oracle as projection: bisection on the segment eye -> item
    eye = Vec3(0, 0, 4)
    item_pos = Vec3(2, 0, -4)
    ou, ov = bisect_plane_crossing(eye, item_pos)
    deck = SlideDeck(slides=((SlideItem("sprite", item_pos, sprite="pic"),),))
    board = make_board(deck)
    viewers = {FRONT: Viewer(eye, FRONT), BACK: VIEWERS[BACK]}
    lists = compose_display_lists(board, viewers, frame_id=1)
    sprite = [p for p in lists[FRONT].primitives if p["kind"] == "sprite"][0]
    assert sprite["u"] == pytest.approx(ou, abs=1e-9)
    assert sprite["v"] == pytest.approx(ov, abs=1e-9)
    assert sprite["u"] == pytest.approx(1.0, abs=1e-9)


def test_render_determinism_bit_identical():
    board = make_board()
    board.set_writing("pen", True, side=FRONT)
    for i in range(5):
        board.add_stroke_point(mk_pose(role="right_hand", x=0.1 * i, y=0.05 * i, z=0.2, device="pen"))
    board.set_role_play(True)
    board.avatar = _avatar()
    a = compose_display_lists(board, VIEWERS, frame_id=3)
    b = compose_display_lists(board, VIEWERS, frame_id=3)
    assert a[FRONT] == b[FRONT]
    assert a[BACK] == b[BACK]
    assert a[FRONT].digest() == b[FRONT].digest()


def test_clipping_soundness():
    rng = random.Random(8)
    board = make_board()
    board.set_writing("pen", True, side=FRONT)
    for _ in range(100):
        board.add_stroke_point(mk_pose(
            role="right_hand", x=rng.uniform(-6, 6), y=rng.uniform(-5, 5), z=0.2, device="pen"))
    lists = compose_display_lists(board, VIEWERS, frame_id=1)
    half_w = SCREEN.width / 2 + board.clip_margin
    half_h = SCREEN.height / 2 + board.clip_margin
    for dl in lists.values():
        for prim in dl.primitives:
            for u, v in prim.get("points", []):
                assert abs(u) <= half_w + 1e-12
                assert abs(v) <= half_h + 1e-12


# -- afterimage --------------------------------------------------------------------------

def test_freeze_single_afterimage_full_opacity():
    board = make_board()
    board.set_role_play(True)
    board.avatar = _avatar()
    board.freeze_afterimage()
    assert len(board.afterimages) == 1
    assert Board.afterimage_opacity(0) == 1.0


def test_freeze_three_opacities_geometric():
    board = make_board()
    board.set_role_play(True)
    for i in range(3):
        board.avatar = _avatar(dy=0.1 * i)
        board.freeze_afterimage()
    lists = compose_display_lists(board, VIEWERS, frame_id=1)
    by_layer = {}
    for p in lists[FRONT].primitives:
        if p["layer"].startswith("afterimage"):
            by_layer[p["layer"]] = p["opacity"]
    # newest-first opacities 1.0, 0.7, 0.49
    assert by_layer["afterimage[2]"] == pytest.approx(1.0)
    assert by_layer["afterimage[1]"] == pytest.approx(0.7)
    assert by_layer["afterimage[0]"] == pytest.approx(0.49)


def test_afterimage_opacity_monotone_until_floor():
    ops = [Board.afterimage_opacity(k) for k in range(12)]
    for a, b in zip(ops, ops[1:]):
        assert b <= a
    strictly = [o for o in ops if o > 0.15]
    assert strictly == sorted(strictly, reverse=True)
    assert min(ops) == 0.15


def test_freeze_identical_pose_twice_no_dedupe():
    board = make_board()
    board.set_role_play(True)
    board.avatar = _avatar()
    board.freeze_afterimage()
    board.freeze_afterimage()
    assert len(board.afterimages) == 2


def test_freeze_requires_role_play():
    board = make_board()
    with pytest.raises(RolePlayInactive):
        board.freeze_afterimage(_avatar())


# -- dashboard ---------------------------------------------------------------------------

TEACHER = Viewer(Vec3(0, 1.6, -2.0), BACK)


def test_zero_students_zero_tags():
    board = make_board()
    board.update_dashboard([], TEACHER)
    assert board.tags == []


def test_tag_anchored_above_head():
    board = make_board()
    head = Vec3(1, 1.1, 3)
    anchor = Vec3(1, 1.35, 3)
    ou, ov = bisect_plane_crossing(TEACHER.eye, anchor)
    board.update_dashboard([StudentInfo("s01", "Ada", head)], TEACHER)
    tag = board.tags[0]
    assert tag.u == pytest.approx(ou, abs=1e-9)
    assert tag.v == pytest.approx(ov, abs=1e-9)


def test_overlapping_tags_stack_in_id_order():
    board = make_board()
    students = [
        StudentInfo("s02", "Two", Vec3(0.02, 1.1, 3)),
        StudentInfo("s01", "One", Vec3(0.0, 1.1, 3)),
    ]
    board.update_dashboard(students, TEACHER)
    tags = {t.student_id: t for t in board.tags}
    assert tags["s02"].v == pytest.approx(tags["s01"].v + tags["s01"].height, abs=1e-9)


def test_praise_exact_center():
    board = make_board()
    board.update_dashboard([StudentInfo("s01", "One", Vec3(0, 1.1, 3))], TEACHER)
    tag = board.tags[0]
    ev = board.apply_praise(ScreenPoint(tag.u, tag.v), radius=0.3, timestamp_us=42)
    assert ev is not None and ev.student_id == "s01"
    assert board.praise_counts["s01"] == 1
    assert board.tags[0].praise_count == 1


def test_praise_out_of_radius_none():
    board = make_board()
    board.update_dashboard([StudentInfo("s01", "One", Vec3(0, 1.1, 3))], TEACHER)
    tag = board.tags[0]
    assert board.apply_praise(ScreenPoint(tag.u + 3.0, tag.v), radius=0.3) is None


def test_praise_tie_goes_to_lower_id():
    board = make_board()
    board.update_dashboard([
        StudentInfo("s01", "One", Vec3(-1.0, 1.1, 3)),
        StudentInfo("s02", "Two", Vec3(1.0, 1.1, 3)),
    ], TEACHER)
    a, b = board.tags
    mid = ScreenPoint((a.u + b.u) / 2, (a.v + b.v) / 2)
    ev = board.apply_praise(mid, radius=3.0)
    assert ev.student_id == "s01"


def test_dashboard_requires_back_viewer():
    board = make_board()
    with pytest.raises(ValueError):
        board.update_dashboard([], Viewer(Vec3(0, 1.2, 5.0), FRONT))


def test_tags_render_only_on_back_list():
    board = make_board()
    board.update_dashboard([StudentInfo("s01", "One", Vec3(0, 1.1, 3))], TEACHER)
    lists = compose_display_lists(board, VIEWERS, frame_id=1)
    assert any(p["kind"] == "tag" for p in lists[BACK].primitives)
    assert not any(p["kind"] == "tag" for p in lists[FRONT].primitives)
