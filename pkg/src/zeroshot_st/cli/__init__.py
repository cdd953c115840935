"""Command-line experiment driver."""
