"""Ftklipse: a plugin-extensible digital forensics case workbench.

Core engine (datastore, casework, rendering, toolkit, reporting, audit_log)
plus a local HTTP service and a CLI over the same operations.
"""

__version__ = "0.1.0"
