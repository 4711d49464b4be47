# Tests package for the GreenCloud market simulator
