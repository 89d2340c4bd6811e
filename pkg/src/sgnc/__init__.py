"""Single-generation network coding with node memory, and CNECC simulation."""
from pathlib import Path

__version__ = "0.1.0"

DATA_DIR = Path(__file__).parent / "data"


def data_path(name: str) -> Path:
    """Path of a shipped network, code or pattern file."""
    return DATA_DIR / name
