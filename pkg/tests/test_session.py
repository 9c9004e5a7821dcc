"""Session dispatch: gates, decoding, pose buffering, IK on Confirm."""

import math

import numpy as np
import pytest

from teleobridge.bridge import (
    Echo,
    ErrorCode,
    ErrorReply,
    Session,
    SetFingers,
    SetJoint,
    SetJointVector,
    StartSequence,
    StopSequence,
)
from teleobridge.kinematics import forward_kinematics, load_model
from teleobridge.wire import ScaleConfig, WireFrame, encode_scaled


@pytest.fixture(scope="module")
def models():
    return {"ur5": load_model("ur5"), "panda": load_model("panda")}


@pytest.fixture
def session(models):
    return Session(models)


def feed(session, *pairs):
    """Handle frames in order, returning the last frame's effects."""
    effects = []
    for tag, value in pairs:
        effects = session.handle_frame(WireFrame(tag, value))
    return effects


def only_error(effects):
    assert len(effects) == 1 and isinstance(effects[0], ErrorReply)
    return effects[0]


# A reachable mode-2 target: FK of a mild UR5 configuration, wire-encoded
# at scale 100 (same numbers as scenarios/mode2_pose.txt).
REACHABLE_POSE = {
    2001: 1050,
    2002: 1025,
    2003: 31,
    2004: 67,
    2005: 74,
    2006: 7,
    2007: 1002,
}


class TestGates:
    @pytest.mark.parametrize(
        "tag,value",
        [(3001, 90), (3101, 10), (2001, 85), (2008, 1), (1001, 1)],
    )
    def test_everything_needs_a_robot_first(self, session, tag, value):
        reply = only_error(feed(session, (tag, value)))
        assert reply.code is ErrorCode.NO_ROBOT

    @pytest.mark.parametrize(
        "tag,value",
        [(3001, 90), (3101, 10), (2001, 85), (2008, 1), (1001, 1)],
    )
    def test_everything_needs_a_mode_second(self, session, tag, value):
        reply = only_error(feed(session, (5000, 1), (tag, value)))
        assert reply.code is ErrorCode.NO_MODE

    @pytest.mark.parametrize(
        "mode_tag,tag,value",
        [
            (4002, 3001, 90),  # joint frame in pose mode
            (4004, 3001, 90),  # joint frame in autonomous mode
            (4001, 2001, 85),  # pose frame in joint mode
            (4001, 1001, 1),  # start in joint mode
            (4002, 1002, 1),  # stop in pose mode
            (4002, 3101, 10),  # fingers are not part of pose mode
        ],
    )
    def test_wrong_mode_is_rejected(self, session, mode_tag, tag, value):
        reply = only_error(feed(session, (5000, 1), (mode_tag, 1), (tag, value)))
        assert reply.code is ErrorCode.WRONG_MODE

    def test_selection_order_robot_then_mode_or_reverse(self, session):
        effects = feed(session, (4001, 1), (5000, 1), (3001, 30))
        assert effects == [SetJoint("ur5", 0, math.radians(30))]

    def test_echo_bypasses_all_gates(self, session):
        effects = feed(session, (9999, 7))
        assert effects == [Echo(WireFrame(9999, 7))]

    def test_operator_may_not_send_telemetry_tags(self, session):
        for tag in (9001, 9002, 9003):
            reply = only_error(feed(session, (tag, 0)))
            assert reply.code is ErrorCode.NOT_ALLOWED


class TestJointFrames:
    def test_panda_joint3_to_minus_90(self, session):
        effects = feed(session, (5001, 1), (4001, 1), (3003, 1090))
        assert effects == [SetJoint("panda", 2, math.radians(-90))]

    def test_joint_frames_work_in_mode_3(self, session):
        effects = feed(session, (5000, 1), (4003, 1), (3006, 45))
        assert effects == [SetJoint("ur5", 5, math.radians(45))]

    def test_seventh_joint_unknown_on_ur5(self, session):
        reply = only_error(feed(session, (5000, 1), (4001, 1), (3007, 10)))
        assert reply.code is ErrorCode.UNKNOWN_JOINT

    def test_seventh_joint_valid_on_panda(self, session):
        effects = feed(session, (5001, 1), (4001, 1), (3007, 10)
        )
        assert effects == [SetJoint("panda", 6, math.radians(10))]

    def test_angle_outside_code_ranges_rejected(self, session):
        reply = only_error(feed(session, (5000, 1), (4001, 1), (3001, 999)))
        assert reply.code is ErrorCode.BAD_VALUE

    def test_gripper_decodes_millimetres(self, session):
        effects = feed(session, (5000, 1), (4001, 1), (3102, 25))
        assert effects == [SetFingers("ur5", 1, 0.025)]

    def test_gripper_allowed_during_autonomy(self, session):
        effects = feed(session, (5000, 1), (4004, 1), (3101, 0))
        assert effects == [SetFingers("ur5", 0, 0.0)]

    def test_gripper_over_range_rejected(self, session):
        reply = only_error(feed(session, (5000, 1), (4001, 1), (3101, 41)))
        assert reply.code is ErrorCode.BAD_VALUE


class TestPoseAndConfirm:
    def prime(self, session, components=REACHABLE_POSE):
        feed(session, (5000, 1), (4002, 1))
        for tag, value in components.items():
            effects = session.handle_frame(WireFrame(tag, value))
            assert effects == []

    def test_incomplete_pose_blocks_confirm(self, session):
        self.prime(session, dict(list(REACHABLE_POSE.items())[:5]))
        reply = only_error(session.handle_frame(WireFrame(2008, 1)))
        assert reply.code is ErrorCode.INCOMPLETE_POSE
        assert len(session.pose_buffer) == 5  # buffer kept for completion

    def test_confirm_solves_to_the_buffered_pose(self, session, models):
        self.prime(session)
        effects = session.handle_frame(WireFrame(2008, 1))
        assert len(effects) == 1 and isinstance(effects[0], SetJointVector)
        solved = forward_kinematics(models["ur5"], np.array(effects[0].q))
        buffer = session.pose_buffer
        target = np.array([buffer["x"], buffer["y"], buffer["z"]])
        assert np.linalg.norm(solved.position - target) <= 2e-4

    def test_unreachable_pose_keeps_buffer_for_correction(self, session):
        far = dict(REACHABLE_POSE)
        far[2001] = encode_scaled(5.0, ScaleConfig(100))  # five metres away
        self.prime(session, far)
        reply = only_error(session.handle_frame(WireFrame(2008, 1)))
        assert reply.code is ErrorCode.UNREACHABLE_POSE
        assert len(session.pose_buffer) == 7
        # correct the one bad field and confirm again
        session.handle_frame(WireFrame(2001, REACHABLE_POSE[2001]))
        effects = session.handle_frame(WireFrame(2008, 1))
        assert isinstance(effects[0], SetJointVector)

    def test_zero_quaternion_rejected(self, session):
        zeros = dict(REACHABLE_POSE)
        zeros.update({2004: 0, 2005: 0, 2006: 0, 2007: 0})
        self.prime(session, zeros)
        reply = only_error(session.handle_frame(WireFrame(2008, 1)))
        assert reply.code is ErrorCode.BAD_VALUE

    def test_switching_robot_clears_the_buffer(self, session):
        self.prime(session)
        session.handle_frame(WireFrame(5001, 1))
        assert session.pose_buffer == {}

    def test_reselecting_same_robot_keeps_the_buffer(self, session):
        self.prime(session)
        session.handle_frame(WireFrame(5000, 1))
        assert len(session.pose_buffer) == 7

    def test_switching_mode_keeps_the_buffer(self, session):
        self.prime(session)
        feed(session, (4001, 1), (4002, 1))
        assert len(session.pose_buffer) == 7


class TestAutonomy:
    def test_start_and_stop_forward_to_the_sequence(self, session):
        assert feed(session, (5000, 1), (4004, 1), (1001, 1)) == [
            StartSequence("ur5")
        ]
        assert session.handle_frame(WireFrame(1002, 1)) == [StopSequence("ur5")]

    def test_command_value_is_not_checked(self, session):
        # valueless commands carry 1 by convention; others are tolerated
        assert feed(session, (5000, 7), (4004, 2), (1001, 9)) == [
            StartSequence("ur5")
        ]

    def test_last_activity_tracks_handle_time(self, session):
        session.handle_frame(WireFrame(5000, 1), now=12.5)
        assert session.last_activity == 12.5
