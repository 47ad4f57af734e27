from ._core import (
    CogwebError,
    aggregate,
    enumerate_close_subsets,
    exact_match,
    format_action,
    parse_action,
    parse_action_line,
    parse_ax_text,
    parse_label_set,
    rouge_l,
    rouge_l_f1,
    rouge_l_f1_tokens,
    round_half_up,
    run_cli,
    serialize_ax,
    success_rate,
    validate_manifest,
)

__all__ = [
    "CogwebError",
    "aggregate",
    "enumerate_close_subsets",
    "exact_match",
    "format_action",
    "parse_action",
    "parse_action_line",
    "parse_ax_text",
    "parse_label_set",
    "rouge_l",
    "rouge_l_f1",
    "rouge_l_f1_tokens",
    "round_half_up",
    "run_cli",
    "serialize_ax",
    "success_rate",
    "validate_manifest",
]
