"""vidprompt: few-shot video-to-text via frame captions, retrieved visual tokens, and LLM prompts."""

__version__ = "0.1.0"
