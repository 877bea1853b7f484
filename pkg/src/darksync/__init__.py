"""Synchronization of spins on a ring coupled through shared decay channels.

Modules: ``operators`` (Pauli algebra), ``model`` (Hamiltonian and jump
operators), ``spectral`` (Liouvillian eigendecomposition, dark states),
``master`` (density-matrix evolution), ``trajectories`` (stochastic
Schroedinger equation), ``analysis`` (FFT, synchronization correlator,
Lyapunov estimate) and ``cli`` with its ``config``/``io``/``plotting`` helpers.
"""

__version__ = "0.1.0"
