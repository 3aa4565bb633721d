"""Command-line front end: config ingestion, scenario runs, CSV/JSON/SVG emission."""
