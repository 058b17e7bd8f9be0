from .experiment_service import (
    ABLATE_HEADER,
    COMPARE_HEADER,
    SWEEP_HEADER,
    ExperimentService,
    write_csv,
)

__all__ = ["ABLATE_HEADER", "COMPARE_HEADER", "SWEEP_HEADER", "ExperimentService", "write_csv"]
