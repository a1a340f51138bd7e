"""Rank-frequency asymptotics of trajectory probabilities in absorbing Markov chains."""
