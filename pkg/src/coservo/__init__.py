"""Kinematic visual-servo simulation stack.

Regional potential feedback, an adaptive image-Jacobian visual-servo control
law with null-space human-effort injection, DMP learning from demonstration,
a deterministic fixed-step simulator, and a live WebSocket service for the
browser UI.
"""

__version__ = "0.1.0"
