# Stand-in for the real package: the top level stays cheap, sub-packages load on demand.
__version__ = "0.0-fixture"
