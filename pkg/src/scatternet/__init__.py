"""Transfer matrices for serial and parallel networks of 1-D scatterers."""
