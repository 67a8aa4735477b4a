from storage.instance_file import digest, load_instance, parse_instance, save_instance, serialize_instance
from storage.report_file import format_report, load_solution, parse_solution, save_report

__all__ = [
    "digest",
    "format_report",
    "load_instance",
    "load_solution",
    "parse_instance",
    "parse_solution",
    "save_instance",
    "save_report",
    "serialize_instance",
]
