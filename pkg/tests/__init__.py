# Tests package for the DEKL checker
