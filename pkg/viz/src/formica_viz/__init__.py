"""Figure rendering for formica run directories.

Consumes only the engine's documented output files (manifest, walker
CSVs, field coefficient snapshots, density tables) and renders the
standard presentation: field heatmaps with oriented walker scatters for
particle runs, and the three-panel density/field summary for
finite-difference runs.
"""

__version__ = "0.1.0"
