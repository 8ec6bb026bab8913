"""OPR Lab command-line interface."""
