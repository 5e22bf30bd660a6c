"""Reference inference service implementing the citeward wire protocol."""

from .app import create_app
from .config import AdapterConfig, GenerationConfig, NliConfig, load_config

__version__ = "0.1.0"
