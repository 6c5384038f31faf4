"""Bridge process exposing transformer checkpoints over the scorer wire
protocol (JSON lines on stdio, or the same bodies over HTTP).

Standard output is reserved for protocol traffic; all logging goes to
standard error.
"""

__version__ = "0.1.0"
