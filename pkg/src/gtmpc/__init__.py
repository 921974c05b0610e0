"""Guidance and control suite: time-varying linear MPC for spacecraft
ground-target tracking under star-tracker exclusion, rate, and torque
constraints, with a closed-loop nonlinear simulation harness and a Monte
Carlo campaign driver."""

__version__ = "0.1.0"
