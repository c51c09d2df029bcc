from .csv_store import CsvStore, ParseResult, parse_spectrum_csv, parse_trace_csv, write_spectra_csv, write_traces_csv

__all__ = ["CsvStore", "ParseResult", "parse_spectrum_csv", "parse_trace_csv", "write_spectra_csv", "write_traces_csv"]
