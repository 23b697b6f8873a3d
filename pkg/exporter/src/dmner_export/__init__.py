"""Bridge real transformer encoders to the matching toolkit: encode a
list of surface strings and write them in the embedding-store text
format the primary package loads."""

from .export import ExportError, ExportJob, export, read_names

__version__ = "0.1.0"
