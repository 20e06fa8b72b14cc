"""Arm-gesture recognition and Morse vibration relay toolkit."""

__version__ = "0.1.0"

MODEL_FORMAT_VERSION = 1
