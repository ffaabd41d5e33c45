from .csv import (
    report_rows,
    write_attention_csv,
    write_case_study_csv,
    write_embeddings_csv,
    write_history_csv,
    write_impact_distribution_csv,
    write_report_csv,
    write_rows,
    write_study_csv,
    write_sweep_csv,
)

__all__ = [
    "report_rows",
    "write_attention_csv",
    "write_case_study_csv",
    "write_embeddings_csv",
    "write_history_csv",
    "write_impact_distribution_csv",
    "write_report_csv",
    "write_rows",
    "write_study_csv",
    "write_sweep_csv",
]
