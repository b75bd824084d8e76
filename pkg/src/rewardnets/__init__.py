"""Reward-network task pipeline: network generation, baseline strategies, a
recurrent Q-policy, strategy-diffusion simulation, transmission experiments,
analysis exports, and a live session API."""

__version__ = "1.0"
