# Seeded random streams and SVG charts
