from .prequential import (
    InstanceRecord,
    RunReport,
    TimingSummary,
    run_prequential,
    timing_report,
)
from .stats import (
    FriedmanResult,
    StatTestResult,
    friedman_nemenyi,
    paired_t_test,
    student_t_cdf,
)
from .diagnostics import (
    LipschitzBoundConfig,
    ProbeCell,
    VarianceReport,
    mcdiarmid_bound,
    variance_probe,
    zeta_tail_sum,
)
from .ablation import (
    AblationReport,
    AblationResult,
    PairedDelta,
    ablation_grid,
    write_ablation_csv,
)

__all__ = [
    "InstanceRecord",
    "RunReport",
    "TimingSummary",
    "run_prequential",
    "timing_report",
    "StatTestResult",
    "FriedmanResult",
    "paired_t_test",
    "friedman_nemenyi",
    "student_t_cdf",
    "LipschitzBoundConfig",
    "ProbeCell",
    "VarianceReport",
    "variance_probe",
    "mcdiarmid_bound",
    "zeta_tail_sum",
    "AblationReport",
    "AblationResult",
    "PairedDelta",
    "ablation_grid",
    "write_ablation_csv",
]
