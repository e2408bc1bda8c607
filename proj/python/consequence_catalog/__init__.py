"""Python bindings for the consequence catalog core."""

from ._core import (
    Catalog,
    CatalogError,
    aspects,
    canonicalize_url,
    cohen_kappa,
    compute_metrics,
    default_prompts,
    evaluate_title_baseline,
    parse_aspect,
    raw_agreement,
    render_funnel_table,
    run_pipeline,
    synthetic_titles,
)

__all__ = [
    "Catalog",
    "CatalogError",
    "aspects",
    "canonicalize_url",
    "cohen_kappa",
    "compute_metrics",
    "default_prompts",
    "evaluate_title_baseline",
    "parse_aspect",
    "raw_agreement",
    "render_funnel_table",
    "run_pipeline",
    "synthetic_titles",
]
