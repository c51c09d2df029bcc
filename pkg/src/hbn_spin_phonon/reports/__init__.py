from .generator import render_report_text, write_report

__all__ = ["render_report_text", "write_report"]
