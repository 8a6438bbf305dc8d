"""Collision-free cooperative multi-player stochastic bandits."""
