#!/usr/bin/env python3
"""Seed a demo data directory with a case, evidence, notes and a report.

Usage: python scripts/seed_demo.py [data_root]

Afterwards, browse it with the CLI or serve it for the web UI:

    ftklipse case list --data-root demo-data
    ftklipse serve --data-root demo-data --ui-dir frontend/dist
"""

import sys
import tempfile
from pathlib import Path

from ftklipse import casework, reporting
from ftklipse.casework import Region
from ftklipse.datastore import open_store

PNG_HEADER = bytes.fromhex("89504e470d0a1a0a") + b"\x00" * 24 + b"not really a png"


def main() -> None:
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo-data")
    store = open_store(root, "file")
    case = casework.create_case(store, "Demo intrusion 2006-04", "varga")
    casework.set_front_matter(
        store, case,
        executive_summary="Workstation seized after anomalous outbound traffic.",
        introduction="Two artifacts were imported from the seized disk for triage.",
        conclusion="Both artifacts verified intact; extraction attached for review.",
    )

    with tempfile.TemporaryDirectory() as tmp:
        png = Path(tmp) / "screenshot.png"
        png.write_bytes(PNG_HEADER)
        mail = Path(tmp) / "outbox.mbox"
        mail.write_bytes(b"From: someone@example.org\nSubject: re: the files\n\nsee attachment\n")

        image = casework.import_evidence(store, case, png, "varga")
        mailbox = casework.import_evidence(store, case, mail, "varga")

    casework.verify_evidence(store, case, image, "varga")
    casework.add_note(store, case, image, "okafor", "PNG signature present", Region(0, 8))
    casework.add_note(store, case, mailbox, "varga", "references an attachment never found")
    header = casework.extract_region(store, case, image, 0, 8, "png_signature.bin", "okafor")

    spec = reporting.build_report_spec(
        store, case, "varga",
        excerpts=[reporting.Excerpt(evidence_id=image.id, offset=0, length=32, caption="file header")],
    )
    report = reporting.write_report(store.root_path, spec, case, "html")

    print(f"data root      : {root}")
    print(f"case           : {case.id} ({case.title})")
    print(f"evidence       : {[ev.id for ev in case.evidences]}")
    print(f"extracted      : {header.id} ({header.original_name})")
    print(f"report         : {report}")
    print(f"next           : ftklipse serve --data-root {root} --ui-dir frontend/dist")
    store.close()


if __name__ == "__main__":
    main()
