"""Fault awareness for 3D-torus interconnects: register codecs, the LO|FA|MO
watchdog managers, a discrete-event torus simulator, a link efficiency model
and an RDMA buffer table."""

__version__ = "0.1.0"
