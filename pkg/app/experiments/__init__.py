"""Monte-Carlo experiments."""
