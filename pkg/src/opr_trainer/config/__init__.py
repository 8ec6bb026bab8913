"""Runtime configuration for OPR Lab."""

from opr_trainer.config.settings import settings  # noqa: F401
