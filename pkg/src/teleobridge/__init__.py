"""Teleoperation bridge for simulated UR5 and Panda arms.

The package is organized by layer: ``wire`` (framing and codecs),
``kinematics`` (models, FK, Jacobian, IK), ``control`` (joint and gripper
controllers), ``sim`` (scene, perception, planning, grasp sequencing,
world stepping), ``bridge`` (TCP/WebSocket service, sessions, latency and
accuracy metrics), ``reports`` (benchmark artifacts) and ``cli``.
"""

__version__ = "0.1.0"
