"""Course-aware retrieval-augmented tutoring service with didactic guardrails."""

__version__ = "0.1.0"
