"""Regenerate docs/config.schema.json from the harness models."""
import json
from pathlib import Path

from bushydnc.harness import config_schema

out = Path(__file__).resolve().parent.parent / "docs" / "config.schema.json"
out.write_text(json.dumps(config_schema(), indent=2, sort_keys=True) + "\n")
print(f"wrote {out}")
