"""avforge: tools for building and scoring audio-visual inconsistency benchmarks."""

__version__ = "0.1.0"
