"""Two-stage human annotation study: sampling, storage, agreement, serving."""

from .study import (
    AgreementReport,
    AnnotationLabel,
    AnnotationTask,
    SKIP_VALUE,
    STAGE1_VALUES,
    STAGE2_VALUES,
    StageAgreement,
    VeracityStats,
    agreement_report,
    cohen_kappa,
    observed_agreement,
    read_tasks,
    sample_study,
    validate_label_value,
    veracity_change_rate,
    write_tasks,
)
from .store import LabelStore, load_label_entries, merge_label_files
from .service import ServiceState, make_server

__all__ = [
    "AgreementReport",
    "AnnotationLabel",
    "AnnotationTask",
    "SKIP_VALUE",
    "STAGE1_VALUES",
    "STAGE2_VALUES",
    "StageAgreement",
    "VeracityStats",
    "agreement_report",
    "cohen_kappa",
    "observed_agreement",
    "read_tasks",
    "sample_study",
    "validate_label_value",
    "veracity_change_rate",
    "write_tasks",
    "LabelStore",
    "load_label_entries",
    "merge_label_files",
    "ServiceState",
    "make_server",
]
