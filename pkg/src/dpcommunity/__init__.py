"""Community detection under edge differential privacy."""
