"""scorer_service: transformer-backed relation scorer behind the
scorer wire protocol (POST /score, GET /health)."""

__version__ = "0.1.0"
