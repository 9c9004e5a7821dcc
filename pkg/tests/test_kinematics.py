import math

import numpy as np
import pytest

from dh_reference import dh_modified, dh_standard, mat_mul, reference_fk, translation4
from teleobridge.errors import ModelError
from teleobridge.kinematics import (
    DhRow,
    IkParams,
    KinematicModel,
    Pose,
    clamp_to_limits,
    forward_kinematics,
    inverse_kinematics,
    jacobian,
    link_frames,
    load_model,
    quat_angle,
    quat_from_matrix,
    quat_to_matrix,
    quat_to_rotation_vector,
    solution_complexity,
)

UR5 = load_model("ur5")
PANDA = load_model("panda")
MODELS = {"ur5": UR5, "panda": PANDA}

# Golden poses computed with the reference evaluator (dh_reference.py).
GOLDEN = {
    "ur5": {
        "q": UR5.home,
        "position": (-0.4869, -0.10915, 0.32845900000000006),
        "rotation": ((0, 1, 0), (1, 0, 0), (0, 0, -1)),
    },
    "panda": {
        "q": PANDA.home,
        "position": (0.30689056659294117, 0.0, 0.4868820523028392),
        "rotation": (
            (0.7071067811865476, -0.7071067811865476, 0),
            (-0.7071067811865476, -0.7071067811865476, 0),
            (0, 0, -1),
        ),
    },
}


def model_rows(model):
    return [(r.a, r.alpha, r.d, r.theta_offset) for r in model.rows]


def random_q(model, rng):
    lows = np.array([lo for lo, _ in model.limits])
    highs = np.array([hi for _, hi in model.limits])
    return lows + rng.random(model.dof) * (highs - lows)


def test_builtin_models_load():
    assert UR5.name == "ur5" and UR5.convention == "standard" and UR5.dof == 6
    assert PANDA.name == "panda" and PANDA.convention == "modified" and PANDA.dof == 7
    # Limits are +-180 degrees clamped to the manufacturer envelope.
    assert UR5.limits[0] == (-math.pi, math.pi)
    assert PANDA.limits[3] == (-3.0718, -0.0698)
    assert PANDA.limits[5][1] == math.pi


def test_fk_matches_frozen_golden_poses():
    for name, golden in GOLDEN.items():
        pose = forward_kinematics(MODELS[name], golden["q"])
        assert np.allclose(pose.position, golden["position"], atol=1e-9)
        assert np.allclose(pose.rotation(), golden["rotation"], atol=1e-9)


def test_fk_panda_all_zero_tool_pose():
    # All-zero q violates joint 4 limits; FK must still evaluate it raw.
    pose = forward_kinematics(PANDA, np.zeros(7))
    assert np.allclose(pose.position, (0.088, 0.0, 0.8226), atol=1e-9)
    assert np.allclose(pose.rotation(), np.diag([1.0, -1.0, -1.0]), atol=1e-9)


def test_fk_matches_reference_evaluator_on_random_configs():
    rng = np.random.default_rng(7)
    for model in MODELS.values():
        tool = [list(row) for row in model.tool]
        for _ in range(50):
            q = random_q(model, rng)
            expected = reference_fk(model_rows(model), model.convention, list(q), tool)
            got = link_frames(model, q)[-1] @ model.tool
            assert np.allclose(got, np.array(expected), atol=1e-9)
            pose = forward_kinematics(model, q)
            assert np.allclose(pose.position, [row[3] for row in expected[:3]], atol=1e-9)


def test_fk_of_chain_equals_composed_halves():
    rng = np.random.default_rng(11)
    for model in MODELS.values():
        rows = model.rows
        for split in (1, model.dof // 2, model.dof - 1):
            wide = ((-10.0, 10.0),)
            first = KinematicModel(
                "first", model.convention, rows[:split], wide * split,
                np.eye(4), (0.0,) * split,
            )
            second = KinematicModel(
                "second", model.convention, rows[split:], wide * (model.dof - split),
                model.tool, (0.0,) * (model.dof - split),
            )
            q = random_q(model, rng)
            whole = link_frames(model, q)[-1] @ model.tool
            left = link_frames(first, q[:split])[-1]
            right = link_frames(second, q[split:])[-1] @ second.tool
            assert np.allclose(whole, left @ right, atol=1e-9)


def test_fk_quaternion_always_normalized():
    rng = np.random.default_rng(3)
    for model in MODELS.values():
        for _ in range(25):
            pose = forward_kinematics(model, random_q(model, rng))
            assert abs(np.linalg.norm(pose.orientation) - 1.0) < 1e-12


def test_base_rotation_preserves_distance_to_origin():
    rng = np.random.default_rng(5)
    for model in MODELS.values():
        for _ in range(10):
            q = random_q(model, rng)
            shifted = q.copy()
            shifted[0] += math.pi
            a = forward_kinematics(model, q).position
            b = forward_kinematics(model, shifted).position
            assert abs(np.linalg.norm(a) - np.linalg.norm(b)) < 1e-9
            assert abs(a[2] - b[2]) < 1e-9


def test_fk_rejects_bad_q():
    with pytest.raises(ModelError):
        forward_kinematics(UR5, [0.0] * 5)
    with pytest.raises(ModelError):
        forward_kinematics(UR5, [0.0] * 5 + [math.nan])


def test_clamp_to_limits():
    q = clamp_to_limits(PANDA, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0])
    assert q[3] == pytest.approx(-0.0698)
    assert q[6] == pytest.approx(2.8973)
    q = clamp_to_limits(UR5, [4.0, -4.0, 0.0, 0.0, 0.0, 0.0])
    assert q[0] == pytest.approx(math.pi)
    assert q[1] == pytest.approx(-math.pi)


def finite_difference_jacobian(model, q, h=1e-5):
    jac = np.zeros((6, model.dof))
    for k in range(model.dof):
        dq = np.zeros(model.dof)
        dq[k] = h
        plus = forward_kinematics(model, q + dq)
        minus = forward_kinematics(model, q - dq)
        jac[:3, k] = (plus.position - minus.position) / (2 * h)
        relative = plus.rotation() @ minus.rotation().T
        jac[3:, k] = quat_to_rotation_vector(quat_from_matrix(relative)) / (2 * h)
    return jac


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(13)
    for model in MODELS.values():
        for _ in range(20):
            q = random_q(model, rng)
            analytic = jacobian(model, q)
            numeric = finite_difference_jacobian(model, q)
            assert np.max(np.abs(analytic - numeric)) < 1e-6


def test_jacobian_well_conditioned_at_home():
    # Home configurations sit away from singularities.
    for model in MODELS.values():
        sigma = np.linalg.svd(jacobian(model, model.home), compute_uv=False)
        assert sigma[-1] > 0.05


def test_quaternion_matrix_round_trip():
    rng = np.random.default_rng(17)
    for _ in range(100):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        r = quat_to_matrix(q)
        back = quat_from_matrix(r)
        assert min(np.linalg.norm(back - q), np.linalg.norm(back + q)) < 1e-9
        assert np.allclose(quat_to_matrix(back), r, atol=1e-9)


def test_rotation_vector_edge_cases():
    assert np.allclose(quat_to_rotation_vector(np.array([0.0, 0.0, 0.0, 1.0])), 0.0)
    # Rotation by nearly pi about z keeps magnitude below pi.
    angle = math.pi - 1e-7
    q = np.array([0.0, 0.0, math.sin(angle / 2), math.cos(angle / 2)])
    vec = quat_to_rotation_vector(q)
    assert np.linalg.norm(vec) == pytest.approx(angle, abs=1e-9)
    # The two quaternion signs describe one rotation.
    assert np.linalg.norm(quat_to_rotation_vector(-q)) <= math.pi + 1e-12


def test_ik_fixpoint_at_home():
    for model in MODELS.values():
        target = forward_kinematics(model, model.home)
        result = inverse_kinematics(model, target, model.home)
        assert result.converged and result.status == "converged"
        assert result.iterations == 0
        assert np.allclose(result.q, model.home)


def test_ik_reaches_random_fk_targets():
    rng = np.random.default_rng(23)
    for model in MODELS.values():
        hits = 0
        for _ in range(20):
            q_true = random_q(model, rng)
            target = forward_kinematics(model, q_true)
            result = inverse_kinematics(model, target, model.home)
            if not result.converged:
                continue
            reached = forward_kinematics(model, result.q)
            if (
                np.linalg.norm(reached.position - target.position) <= 1e-3
                and quat_angle(reached.orientation, target.orientation)
                <= math.radians(0.5)
            ):
                hits += 1
        assert hits >= 19, f"{model.name}: only {hits}/20 targets reached"


def test_ik_is_deterministic_across_calls():
    target = forward_kinematics(UR5, [2.9, -2.2, 2.1, -2.8, -2.9, 2.5])
    first = inverse_kinematics(UR5, target, UR5.home)
    second = inverse_kinematics(UR5, target, UR5.home)
    assert first.converged == second.converged
    assert np.array_equal(first.q, second.q)
    assert first.iterations == second.iterations


def test_ik_solution_respects_limits():
    rng = np.random.default_rng(29)
    for model in MODELS.values():
        for _ in range(5):
            target = forward_kinematics(model, random_q(model, rng))
            result = inverse_kinematics(model, target, model.home)
            clamped = clamp_to_limits(model, result.q)
            assert np.allclose(result.q, clamped)


def test_ik_unreachable_target_reports_status():
    target = Pose(np.array([3.0, 0.0, 0.0]), np.array([0.0, 0.0, 0.0, 1.0]))
    params = IkParams(max_iterations=60, restarts=2)
    result = inverse_kinematics(UR5, target, UR5.home, params)
    assert not result.converged
    assert result.status == "unreachable"
    assert result.pos_residual > 1.0


def test_ik_single_descent_when_restarts_disabled():
    target = forward_kinematics(UR5, [0.4, -1.2, 1.8, -0.9, -1.1, 0.7])
    result = inverse_kinematics(UR5, target, UR5.home, IkParams(restarts=0))
    assert result.converged
    assert result.iterations < 150


def test_ik_rejects_bad_seed():
    target = forward_kinematics(UR5, UR5.home)
    with pytest.raises(ModelError):
        inverse_kinematics(UR5, target, [0.0] * 7)


def test_solution_complexity():
    assert solution_complexity([0.0, 0.0], [0.0, 0.0]) == 0.0
    assert solution_complexity([0.0, 1.0, -1.0], [1.0, 0.5, 0.0]) == pytest.approx(2.5)
    with pytest.raises(ModelError):
        solution_complexity([0.0], [0.0, 0.0])


def test_pose_validation():
    with pytest.raises(ModelError):
        Pose(np.zeros(3), np.zeros(4))
    with pytest.raises(ModelError):
        Pose(np.array([math.inf, 0, 0]), np.array([0, 0, 0, 1]))
    pose = Pose(np.zeros(3), np.array([0.0, 0.0, 0.0, 2.0]))
    assert np.allclose(pose.orientation, [0, 0, 0, 1])


def test_model_loader_errors(tmp_path):
    with pytest.raises(ModelError):
        load_model(tmp_path / "missing.model")
    bad = tmp_path / "bad.model"
    bad.write_text("name x\nconvention standard\njoint 0 0 oops 0 -1 1\n")
    with pytest.raises(ModelError, match="line 3"):
        load_model(bad)
    outside = tmp_path / "outside.model"
    outside.write_text(
        "name x\nconvention standard\n"
        "joint 0 0 0.1 0 -1 1\n"
        "home 2.0\n"
    )
    with pytest.raises(ModelError, match="outside limits"):
        load_model(outside)


def test_reference_conventions_match_textbook_forms():
    # Cross-check the two one-joint transforms against hand expansions.
    t = dh_standard(0.1, math.pi / 2, 0.2, math.pi / 2)
    assert abs(t[0][0]) < 1e-12 and t[2][3] == pytest.approx(0.2)
    m = dh_modified(0.1, math.pi / 2, 0.2, 0.0)
    assert m[0][3] == pytest.approx(0.1)
    assert m[1][3] == pytest.approx(-0.2)
    chain = mat_mul(translation4(0, 0, 0), translation4(1, 2, 3))
    assert chain[0][3] == 1 and chain[1][3] == 2 and chain[2][3] == 3
