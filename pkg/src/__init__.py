# Local-unitary equivalence core module
