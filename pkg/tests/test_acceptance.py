"""Acceptance suite: one test per release criterion, each printing a
[PASS] line (run with -s to see them live). Tolerances are pinned here and
nowhere else."""

import itertools
import json
import math
import random
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from glassboard.analytics.audio import short_time_energy, zero_crossing_rate
from glassboard.analytics.io import load_dataset
from glassboard.analytics.knowledge import AnswerKey, KnowledgeTestResponse, score_test
from glassboard.analytics.report import build_report
from glassboard.analytics.stats import cohen_kappa, mann_whitney_u
from glassboard.analytics.synth import make_synthetic_dataset
from glassboard.errors import DegenerateProjection, GlassboardError
from glassboard.geometry import (
    FRONT,
    ScreenGeometry,
    ScreenPoint,
    Vec3,
    Viewer,
    mirror_u,
    project_point,
)
from glassboard.protocol import decode, encode
from glassboard.techniques import (
    Paddle,
    PhysicsConfig,
    PlayVolume,
    ScreenContact,
    VirtualBall,
    handoff_physical_to_virtual,
    paddle_hit,
    simulate_flight,
)
from glassboard.tracking import solve_two_bone

from conftest import mk_pose
from test_analytics_stats import kappa_closed_form, mw_exact_oracle
from test_protocol import _random_message

SCREEN = ScreenGeometry()


def ok(cid: str, text: str) -> None:
    print(f"[PASS] {cid}: {text}")


# -- C01 knowledge-test scorer ---------------------------------------------------

def test_c01_knowledge_scorer_max_and_monotonicity():
    t0 = time.perf_counter()
    key = AnswerKey.from_lists(["b", "d", "a", "d"], [["c"], ["a", "b", "c"]])
    perfect = KnowledgeTestResponse(key.single_choice, key.multiple_choice, (5,) * 6)
    assert score_test(perfect, key) == 38 == 4 * 1 + 2 * 2 + 6 * 5

    rng = random.Random(20_26)
    opts = ["a", "b", "c", "d"]
    for _ in range(50):
        resp = KnowledgeTestResponse.from_lists(
            [rng.choice(opts) for _ in range(4)],
            [rng.sample(opts, rng.randint(1, 4)) for _ in range(2)],
            [rng.randint(0, 5) for _ in range(6)],
        )
        base = score_test(resp, key)
        assert 0 <= base <= 38
        # every single-answer improvement, exhaustively
        for i in range(4):
            fixed = list(resp.single_choice)
            fixed[i] = key.single_choice[i]
            assert score_test(KnowledgeTestResponse(
                tuple(fixed), resp.multiple_choice, resp.open_ratings), key) >= base
        for i in range(2):
            fixed_m = list(resp.multiple_choice)
            fixed_m[i] = key.multiple_choice[i]
            assert score_test(KnowledgeTestResponse(
                resp.single_choice, tuple(fixed_m), resp.open_ratings), key) >= base
        for i in range(6):
            if resp.open_ratings[i] < 5:
                raised = list(resp.open_ratings)
                raised[i] += 1
                assert score_test(KnowledgeTestResponse(
                    resp.single_choice, resp.multiple_choice, tuple(raised)), key) >= base
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    ok("C01", f"scorer max is exactly 38; monotone under all single-answer "
              f"improvements of 50 random responses ({elapsed:.2f}s)")


# -- C02 Mann-Whitney ---------------------------------------------------------------

def test_c02_mann_whitney_exact_and_complement():
    t0 = time.perf_counter()
    checked = 0
    for n1 in range(1, 5):
        for n2 in range(1, 5):
            n = n1 + n2
            for positions in itertools.combinations(range(n), n1):
                a = [float(i + 1) for i in positions]
                b = [float(i + 1) for i in range(n) if i not in positions]
                u_oracle, p_oracle = mw_exact_oracle(a, b)
                res = mann_whitney_u(a, b)
                assert res.statistic == u_oracle
                assert abs(res.p_value - p_oracle) < 1e-12
                checked += 1

    rng = random.Random(777)
    for _ in range(1000):
        n1 = rng.randint(1, 11)
        n2 = rng.randint(1, 12 - n1)
        vals = rng.sample(range(100_000), n1 + n2)
        a = [float(v) for v in vals[:n1]]
        b = [float(v) for v in vals[n1:]]
        u_oracle, p_oracle = mw_exact_oracle(a, b)
        res = mann_whitney_u(a, b)
        assert res.statistic == u_oracle
        assert abs(res.p_value - p_oracle) < 1e-12

    for _ in range(10_000):
        n1 = rng.randint(1, 25)
        n2 = rng.randint(1, 25)
        a = [rng.randint(0, 10) * 0.5 for _ in range(n1)]
        b = [rng.randint(0, 10) * 0.5 for _ in range(n2)]
        assert mann_whitney_u(a, b).statistic + mann_whitney_u(b, a).statistic == n1 * n2
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    ok("C02", f"exact p matches enumeration oracle on {checked} exhaustive patterns "
              f"+ 1000 random cases; U complement holds on 10^4 cases ({elapsed:.1f}s)")


# -- C03 kappa -------------------------------------------------------------------------

def test_c03_kappa_closed_form_and_diagonal():
    rng = random.Random(1031)
    for _ in range(1000):
        k = rng.randint(2, 6)
        matrix = [[rng.randint(0, 12) for _ in range(k)] for _ in range(k)]
        if sum(map(sum, matrix)) == 0:
            matrix[rng.randrange(k)][rng.randrange(k)] = 1
        m = np.asarray(matrix, dtype=float)
        p_e = float(np.dot(m.sum(axis=1), m.sum(axis=0))) / m.sum() ** 2
        if p_e == 1.0:
            assert cohen_kappa(matrix).statistic == 1.0
            continue
        assert abs(cohen_kappa(matrix).statistic - kappa_closed_form(matrix)) < 1e-12
    for k in range(1, 7):
        diag = [[(7 * i + 3 if i == j else 0) for j in range(k)] for i in range(k)]
        assert cohen_kappa(diag).statistic == 1.0
    ok("C03", "kappa matches closed form within 1e-12 on 1000 random matrices; "
              "diagonal matrices give exactly 1")


# -- C04 acoustic features ----------------------------------------------------------------

def test_c04_zcr_and_energy_of_synthesized_sines():
    rate = 44_100
    t = np.arange(rate) / rate
    for freq in (110.0, 440.0, 1760.0):
        x = np.sin(2 * math.pi * freq * t)
        frames = zero_crossing_rate(x, frame_len=rate, hop=rate)
        assert len(frames) == 1
        assert abs(frames[0].zcr - 2 * freq / rate) < 5e-4
    # unit sine over whole periods: discrete mean square is exactly 1/2
    x = np.sin(2 * math.pi * 441.0 * t)
    frames = short_time_energy(x, frame_len=44_100, hop=44_100)
    assert abs(frames[0].energy - 0.5) < 1e-6
    ok("C04", "ZCR within 5e-4 of 2f/fs at 110/440/1760 Hz; unit-sine energy "
              "within 1e-6 of 0.5")


# -- C05 projection ---------------------------------------------------------------------

def test_c05_projection_geometry():
    rng = random.Random(40_99)
    for _ in range(100_000):
        eye = Vec3(rng.uniform(-4, 4), rng.uniform(-2, 4), rng.uniform(0.2, 8))
        p = Vec3(rng.uniform(-4, 4), rng.uniform(-2, 4), -rng.uniform(0.2, 8))
        if rng.random() < 0.5:
            eye, p = Vec3(eye.x, eye.y, -eye.z), Vec3(p.x, p.y, -p.z)
        viewer = Viewer(eye, FRONT if eye.z > 0 else "back")
        sp = project_point(viewer, p, SCREEN)
        s = Vec3(sp.u, sp.v, 0.0)
        cross = (s - eye).cross(p - eye)
        scale = max(1.0, (p - eye).norm() ** 2)
        assert cross.norm() / scale < 1e-9
        assert abs(s.z) < 1e-9
        assert math.isfinite(sp.u) and math.isfinite(sp.v)

    # double mirror is bit-exact
    for _ in range(10_000):
        s = ScreenPoint(rng.uniform(-3, 3), rng.uniform(-3, 3))
        m = mirror_u(mirror_u(s))
        assert m.u == s.u and m.v == s.v

    # degenerate depths are rejected, never NaN
    rejected = 0
    for _ in range(1000):
        z = rng.uniform(0.2, 6)
        eye = Vec3(rng.uniform(-2, 2), rng.uniform(0, 2), z)
        p = Vec3(rng.uniform(-2, 2), rng.uniform(0, 2), z + rng.uniform(-1e-6, 1e-6))
        try:
            sp = project_point(Viewer(eye, FRONT), p, SCREEN)
            assert math.isfinite(sp.u) and math.isfinite(sp.v)
        except DegenerateProjection:
            rejected += 1
    assert rejected > 0
    ok("C05", "10^5 random pairs collinear and on-plane within 1e-9 m; "
              "double mirror bit-exact; degenerate depths rejected, never NaN")


# -- C06 ballistics -------------------------------------------------------------------------

def test_c06_ballistics_accuracy_and_energy():
    speed, angle = 3.0, math.radians(45)
    contact = ScreenContact(ScreenPoint(0.0, 1.0), Vec3(
        0.0, speed * math.sin(angle), -speed * math.cos(angle)), 0, FRONT)
    cfg = PhysicsConfig(dt=1e-3, play_volume=PlayVolume(Vec3(-50, -50, -50), Vec3(50, 50, 50)))
    ball = handoff_physical_to_virtual(contact, cfg)
    flight = simulate_flight(ball, cfg, 1.0)
    p0, v0, g = ball.position, ball.velocity, cfg.gravity
    worst = 0.0
    for i, b in enumerate(flight):
        t = i * cfg.dt
        truth = Vec3(p0.x + v0.x * t + 0.5 * g.x * t * t,
                     p0.y + v0.y * t + 0.5 * g.y * t * t,
                     p0.z + v0.z * t + 0.5 * g.z * t * t)
        worst = max(worst, (b.position - truth).norm())
    assert worst <= 5e-3

    rng = random.Random(606)
    hit_cfg = PhysicsConfig(restitution=1.0)
    hits = 0
    trials = 0
    while hits < 10_000 and trials < 200_000:
        trials += 1
        center = Vec3(rng.uniform(-1, 1), rng.uniform(0, 2), rng.uniform(-1, 1))
        offset = Vec3(rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1))
        if offset.norm() < 1e-9:
            continue
        offset = offset.normalized().scale(rng.uniform(0.01, 0.24))
        pos = center + offset
        vel = Vec3(rng.gauss(0, 3), rng.gauss(0, 3), rng.gauss(0, 3))
        ball = VirtualBall(pos, vel)
        paddle = Paddle(mk_pose(role="left_hand", x=center.x, y=center.y, z=center.z), radius=0.25)
        out = paddle_hit(ball, paddle, hit_cfg)
        if out is ball:
            continue
        hits += 1
        e_before = 0.5 * vel.dot(vel) + 9.81 * pos.y
        e_after = 0.5 * out.velocity.dot(out.velocity) + 9.81 * out.position.y
        assert e_after <= e_before + 1e-9
    assert hits == 10_000
    ok("C06", f"45-degree handoff within {worst * 1000:.2f} mm of the parabola over 1 s; "
              "energy never increased across 10^4 restitution-1 hits")


# -- C07 inverse kinematics ---------------------------------------------------------------------

def test_c07_two_bone_ik():
    rng = random.Random(505)
    for _ in range(10_000):
        a = rng.uniform(0.2, 0.5)
        b = rng.uniform(0.2, 0.5)
        root = Vec3(rng.uniform(-1, 1), rng.uniform(0, 2), rng.uniform(-1, 1))
        d = rng.uniform(abs(a - b) + 1e-3, (a + b) * 0.999)
        direction = Vec3(rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1))
        if direction.norm() < 1e-9:
            direction = Vec3(1, 0, 0)
        target = root + direction.normalized().scale(d)
        pole = Vec3(rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1))
        mid, end = solve_two_bone(root, target, a, b, pole)
        assert abs((mid - root).norm() - a) < 1e-6
        assert abs((end - mid).norm() - b) < 1e-6
        # law-of-cosines oracle for the interior angle at the joint
        expected = math.acos(max(-1.0, min(1.0, (a * a + b * b - d * d) / (2 * a * b))))
        v1, v2 = root - mid, end - mid
        got = math.acos(max(-1.0, min(1.0, v1.dot(v2) / (v1.norm() * v2.norm()))))
        assert abs(got - expected) < 1e-9
    ok("C07", "10^4 reachable targets: bone lengths within 1e-6 m; elbow angle "
              "matches the law-of-cosines oracle within 1e-9 rad")


# -- C08 replay determinism ------------------------------------------------------------------------

def test_c08_replay_determinism_across_processes(tmp_path):
    for name in ("presentation", "roleplay_afterimage", "ball_handoff"):
        digest_files = []
        for run in (1, 2):
            out = tmp_path / f"{name}-{run}"
            t0 = time.perf_counter()
            proc = subprocess.run(
                [sys.executable, "-m", "glassboard.cli", "simulate",
                 "--script", name, "--out", str(out)],
                capture_output=True, text=True, timeout=60)
            elapsed = time.perf_counter() - t0
            assert proc.returncode == 0, proc.stderr
            assert elapsed < 5.0, f"{name} run {run} took {elapsed:.1f}s"
            digest_files.append((out / "digests.txt").read_bytes())
            assert (out / "events.jsonl").exists()
            assert (out / "final_snapshot.json").exists()
        assert digest_files[0] == digest_files[1], f"{name} digests differ across processes"
    ok("C08", "three bundled scenarios produced bit-identical display-list "
              "digests across independent processes, each run < 5 s")


# -- C09 report pipeline -----------------------------------------------------------------------------

def test_c09_report_pipeline_injected_and_null(tmp_path):
    injected_dir = tmp_path / "injected"
    make_synthetic_dataset(injected_dir, seed=42, n_students=18,
                           inject_close_posture_s=30.0, inject_loudness_gain=1.5)
    report = build_report(*load_dataset(injected_dir))
    significant = {r.variable for r in report.rows
                   if r.p_value is not None and r.p_value < 0.05}
    assert significant == {"close_posture", "loudness"}, significant
    assert report.row("close_posture").direction == "A>B"
    assert report.row("loudness").direction == "A>B"
    assert report.row("close_posture").n1 == report.row("close_posture").n2 == 18

    null_dir = tmp_path / "null"
    make_synthetic_dataset(null_dir, seed=42, n_students=18,
                           inject_close_posture_s=0.0, inject_loudness_gain=1.0)
    null_report = build_report(*load_dataset(null_dir))
    for row in null_report.rows:
        assert row.p_value is None or row.p_value >= 0.01, row.variable
    ok("C09", "exactly the injected rows (close_posture, loudness) significant "
              "with direction A>B at n=18+18; null dataset has no p < 0.01")


# -- C10 protocol ---------------------------------------------------------------------------------------

def test_c10_protocol_roundtrip_and_fuzz():
    rng = random.Random(9001)
    for _ in range(10_000):
        msg = _random_message(rng)
        line = encode(msg)
        assert encode(decode(line)) == line

    base = encode(_random_message(rng))
    crashes = 0
    blobs = [bytes(rng.randrange(256) for _ in range(rng.randrange(0, 80)))
             for _ in range(2000)]
    blobs += [base[:k] for k in range(len(base))]
    blobs += [base[:k] + b'"' for k in range(0, len(base), 3)]
    blobs += [b"{}" * 40, b"[1,2,3]", b'{"type":null,"seq":null,"payload":null}']
    for blob in blobs:
        try:
            decode(blob)
        except GlassboardError:
            pass
        except Exception:
            crashes += 1
    assert crashes == 0
    ok("C10", "10^4 random messages round-trip byte-identically; "
              f"{len(blobs)} fuzzed frames produced only typed rejections")
