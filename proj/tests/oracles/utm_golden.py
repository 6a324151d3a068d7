"""Golden UTM vectors from PROJ (via pyproj); output is pasted into test_geo.cpp."""
from pyproj import Transformer

POINTS = [
    # lat, lon, zone, south
    (37.8044, -122.2712, 10, False),
    (33.7542, -118.2165, 11, False),
    (0.0, -122.5, 10, False),
    (60.0, -120.0001, 10, False),
    (-45.0, -125.9, 10, True),
    (-33.8688, 151.2093, 56, True),
    (46.0569, 14.5058, 33, False),
    (83.9, 2.5, 31, False),
    (-83.5, -177.2, 1, True),
    (12.345, 0.0, 31, False),
]

for lat, lon, zone, south in POINTS:
    epsg = (32700 if south else 32600) + zone
    t = Transformer.from_crs("EPSG:4326", f"EPSG:{epsg}", always_xy=True)
    e, n = t.transform(lon, lat)
    print(f"  {{{lat!r}, {lon!r}, {zone}, {'true' if south else 'false'}, {e:.6f}, {n:.6f}}},")
