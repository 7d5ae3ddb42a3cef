# Executable DPLL/CDCL transition systems, orderings and trace verification
