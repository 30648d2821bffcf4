"""
Coevolution of hawk-dove conventions and network ties under reinforcement learning
"""
