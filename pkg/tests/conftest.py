import os

# Keep worker autodetection out of unit tests; individual tests override.
os.environ.setdefault("SWARM_THREADS", "1")
