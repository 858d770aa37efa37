"""Tabular Q-learning, Monte Carlo enhanced Q-learning, flat Monte Carlo
Search and UCT-minmax MCTS for small two-player board games.
"""

__version__ = "0.1.0"
