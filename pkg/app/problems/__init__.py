"""Problem instances and uncertainty sets."""
