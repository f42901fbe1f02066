"""Reference exporter: causal-LM scores in the score-records JSONL format."""

from logprob_exporter.export import ExportError, ExportJob, export_model_scores

__all__ = ["ExportError", "ExportJob", "export_model_scores"]
