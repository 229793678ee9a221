"""HTTP service wrapping the scenario runners."""
