"""Package data files (channel membership tables)."""
