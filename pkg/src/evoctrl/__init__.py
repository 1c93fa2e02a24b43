"""evoctrl: evolves interpretable register-machine control programs and
analyzes them on a non-stationary cartpole benchmark."""

__version__ = "0.1.0"
