"""Subcommands of the dekl command line; each module registers itself through setup()."""
