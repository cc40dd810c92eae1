"""Token-level hallucination detection: synthetic data, labels and metrics."""

from ._core import (
    DegenerateError,
    Error,
    InputError,
    ParseError,
    ProtocolError,
    RemoteError,
    SentinelError,
    ServiceClient,
    TransportError,
    align_score,
    align_score_tokens,
    apply_noise,
    assign_labels,
    corpus_hallucination_pct,
    edit_script,
    evaluate_file,
    fleiss_kappa,
    hard_labels,
    majority_vote,
    parse_annotation_line,
    project_word_labels,
    project_word_probs,
    sentence_score_prob,
    sentence_score_ratio,
    serialize_annotation_line,
    spearman,
    synthesize,
    token_kappa,
    token_prf,
)

__all__ = [name for name in dir() if not name.startswith("_")]
