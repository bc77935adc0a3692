"""glassboard: headless engine for a double-sided translucent teaching board.

Subsystems:
  geometry    viewer-dependent projection onto the board plane
  tracking    pose streams, smoothing, velocity, avatar skeleton solving
  board       retained scene and per-tick double-sided display lists
  techniques  ball play, physical-to-virtual handoff, elastic Z modeling
  protocol    line-delimited JSON wire format
  session     fixed-rate tick loop over board + techniques state
  server      TCP / WebSocket session server
  analytics   engagement analytics: coding, audio, stats, reports
  cli         serve / simulate / analyze / synth entry points
"""

__version__ = "0.1.0"

PROTOCOL_VERSION = 1
