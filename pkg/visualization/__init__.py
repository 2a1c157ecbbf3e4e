# Trace and matrix-summary plots
