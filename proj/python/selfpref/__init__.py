"""Self-preference auditing for LLM judges."""

from ._core import (
    AuditReport,
    EvalRecord,
    ModelId,
    RecordSet,
    SelfprefError,
    analytic_target,
    audit,
    binary_entropy,
    cot_summary_fixture,
    decompose,
    entropy_gap_fixture,
    ilsp_summary_fixture,
    ingest_files,
    ingest_text,
    paired_test,
    parse_cot_verdict,
    parse_structured_report,
    recovery,
    relative_delta,
    simulate,
    student_t_cdf,
    template_names,
)

__all__ = [
    "AuditReport",
    "EvalRecord",
    "ModelId",
    "RecordSet",
    "SelfprefError",
    "analytic_target",
    "audit",
    "binary_entropy",
    "cot_summary_fixture",
    "decompose",
    "entropy_gap_fixture",
    "ilsp_summary_fixture",
    "ingest_files",
    "ingest_text",
    "paired_test",
    "parse_cot_verdict",
    "parse_structured_report",
    "recovery",
    "relative_delta",
    "simulate",
    "student_t_cdf",
    "template_names",
]
