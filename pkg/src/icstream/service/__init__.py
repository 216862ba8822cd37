from .app import create_app
from .jobs import JobStore

__all__ = ["create_app", "JobStore"]
