"""Cooperative friendly-jamming security workbench.

A wireless physical-layer-security simulator (path loss, Rayleigh fading,
SINR, secrecy rate, secure energy efficiency) together with three
reinforcement-learning power-allocation optimizers: a mixture-of-experts
diffusion policy, a plain diffusion policy, and DDPG.
"""

__version__ = "0.1.0"
