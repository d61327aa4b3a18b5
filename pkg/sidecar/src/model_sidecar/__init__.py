"""model_sidecar: frozen-model HTTP service behind the vidprompt provider protocol."""

__version__ = "0.1.0"
